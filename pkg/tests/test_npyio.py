import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from attrens import read_npy, write_npy
from attrens.errors import (
    BadMagic,
    FortranOrderUnsupported,
    NonFiniteInput,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)


def roundtrip(tmp_path, arr, name="a.npy"):
    path = tmp_path / name
    write_npy(arr, path)
    return path, read_npy(path)


class TestRoundTrip:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_float_payload_bit_identical(self, tmp_path, rng, dtype):
        arr = rng.standard_normal((2, 3, 4, 4)).astype(dtype)
        _, out = roundtrip(tmp_path, arr)
        assert out.dtype == arr.dtype
        assert out.tobytes() == arr.tobytes()

    def test_bool_mask_identity(self, tmp_path, rng):
        arr = rng.uniform(size=(3, 5, 5)) > 0.5
        _, out = roundtrip(tmp_path, arr)
        assert out.dtype == np.bool_
        np.testing.assert_array_equal(out, arr)

    def test_numpy_reads_our_files(self, tmp_path, rng):
        # cross-check against the ecosystem reader
        arr = rng.standard_normal((2, 7)).astype(np.float32)
        path, _ = roundtrip(tmp_path, arr)
        ref = np.load(path)
        assert ref.tobytes() == arr.tobytes() and ref.shape == arr.shape

    def test_we_read_numpy_files(self, tmp_path, rng):
        arr = rng.standard_normal((4, 2, 2))
        path = tmp_path / "np.npy"
        np.save(path, arr)
        out = read_npy(path)
        assert out.tobytes() == arr.tobytes()

    def test_scalar_and_empty_shapes(self, tmp_path):
        for arr in (np.float64(3.5) * np.ones(()), np.zeros((0, 3))):
            _, out = roundtrip(tmp_path, np.asarray(arr))
            assert out.shape == np.asarray(arr).shape

    @settings(max_examples=60, deadline=None,
              suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        shape=st.lists(st.integers(1, 5), min_size=1, max_size=4),
        dtype=st.sampled_from([np.float32, np.float64]),
        seed=st.integers(0, 2**16),
    )
    def test_property_roundtrip(self, tmp_path, shape, dtype, seed):
        arr = np.random.default_rng(seed).standard_normal(shape).astype(dtype)
        path = tmp_path / f"h{seed}.npy"
        write_npy(arr, path)
        out = read_npy(path)
        assert out.tobytes() == arr.tobytes()
        assert out.shape == arr.shape and out.dtype == arr.dtype


class TestHeaderLayout:
    @pytest.mark.parametrize("shape", [(1,), (3, 3), (2, 3, 4, 5), (17, 1, 1)])
    def test_64_byte_alignment(self, tmp_path, rng, shape):
        path = tmp_path / "aligned.npy"
        write_npy(rng.standard_normal(shape), path)
        raw = path.read_bytes()
        (header_len,) = struct.unpack("<H", raw[8:10])
        assert (10 + header_len) % 64 == 0
        assert raw[10 + header_len - 1 : 10 + header_len] == b"\n"

    def test_nonfinite_refused_by_default(self, tmp_path):
        with pytest.raises(NonFiniteInput):
            write_npy(np.array([np.nan]), tmp_path / "x.npy")
        write_npy(np.array([np.nan]), tmp_path / "x.npy", allow_non_finite=True)
        assert np.isnan(read_npy(tmp_path / "x.npy")).all()


class TestMalformedCorpus:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "zip.npy"
        path.write_bytes(b"PK\x03\x04" + b"\x00" * 32)
        with pytest.raises(BadMagic):
            read_npy(path)

    def test_truncated_magic(self, tmp_path):
        path = tmp_path / "short.npy"
        path.write_bytes(b"\x93NUM")
        with pytest.raises(BadMagic):
            read_npy(path)

    def test_unsupported_version(self, tmp_path, rng):
        path = tmp_path / "v2.npy"
        write_npy(rng.standard_normal(3), path)
        raw = bytearray(path.read_bytes())
        raw[6] = 2  # pretend v2.0
        path.write_bytes(bytes(raw))
        with pytest.raises(UnsupportedVersion):
            read_npy(path)

    def _with_header(self, tmp_path, header, payload=b""):
        body = header.encode()
        path = tmp_path / "h.npy"
        path.write_bytes(b"\x93NUMPY\x01\x00" + struct.pack("<H", len(body)) + body + payload)
        return path

    def test_unsupported_dtype(self, tmp_path):
        path = self._with_header(
            tmp_path, "{'descr': '<i8', 'fortran_order': False, 'shape': (1,), }\n", b"\x00" * 8
        )
        with pytest.raises(UnsupportedDtype):
            read_npy(path)

    def test_fortran_order_rejected(self, tmp_path):
        path = self._with_header(
            tmp_path, "{'descr': '<f8', 'fortran_order': True, 'shape': (1,), }\n", b"\x00" * 8
        )
        with pytest.raises(FortranOrderUnsupported):
            read_npy(path)

    def test_truncated_payload(self, tmp_path):
        # (2, 2) float32 needs 16 bytes; provide 12
        path = self._with_header(
            tmp_path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }\n", b"\x00" * 12
        )
        with pytest.raises(TruncatedPayload):
            read_npy(path)

    def test_overlong_payload(self, tmp_path):
        path = self._with_header(
            tmp_path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }\n", b"\x00" * 20
        )
        with pytest.raises(TruncatedPayload):
            read_npy(path)

    def test_garbage_header(self, tmp_path):
        path = self._with_header(tmp_path, "not a dict at all\n")
        with pytest.raises(BadMagic):
            read_npy(path)

    def test_header_longer_than_file(self, tmp_path):
        path = tmp_path / "trunc.npy"
        path.write_bytes(b"\x93NUMPY\x01\x00" + struct.pack("<H", 500) + b"{'d")
        with pytest.raises(TruncatedPayload):
            read_npy(path)
