"""Reader/writer for version 1.0 of the NPY array file format.

Only the subset needed for attribution pipelines is supported: little-endian
float32/float64 payloads plus 1-byte booleans, C order. Fortran order and
v2/v3 headers are rejected outright instead of silently converted.
"""

import ast
import struct

import numpy as np

from .errors import (
    BadMagic,
    FortranOrderUnsupported,
    IoFailure,
    NonFiniteInput,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)

MAGIC = b"\x93NUMPY"

_DTYPES = {
    "<f4": np.dtype("<f4"),
    "<f8": np.dtype("<f8"),
    "|b1": np.dtype("|b1"),
}


def read_npy(path) -> np.ndarray:
    """Parse an NPY v1.0 file into a C-ordered array.

    Raises BadMagic, UnsupportedVersion, UnsupportedDtype,
    FortranOrderUnsupported or TruncatedPayload on malformed input.
    """
    with open(path, "rb") as fh:
        raw = fh.read()

    if len(raw) < 10 or raw[:6] != MAGIC:
        raise BadMagic(f"{path}: not an NPY file (bad magic bytes)")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise UnsupportedVersion(f"{path}: NPY version {major}.{minor} not supported (1.0 only)")
    (header_len,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + header_len:
        raise TruncatedPayload(f"{path}: header declares {header_len} bytes, file is shorter")

    header_src = raw[10 : 10 + header_len].decode("latin1")
    try:
        header = ast.literal_eval(header_src)
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = tuple(header["shape"])
    except (ValueError, SyntaxError, KeyError, TypeError) as exc:
        raise BadMagic(f"{path}: malformed NPY header: {exc}") from exc

    if descr not in _DTYPES:
        raise UnsupportedDtype(f"{path}: dtype {descr!r} not supported")
    if fortran:
        raise FortranOrderUnsupported(f"{path}: fortran_order arrays are rejected")

    dtype = _DTYPES[descr]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = raw[10 + header_len :]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: shape {shape} x {dtype.itemsize} bytes = {expected}, "
            f"found {len(payload)} payload bytes"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def _descr_for(dtype: np.dtype) -> str:
    if dtype == np.dtype(bool):
        return "|b1"
    if dtype == np.dtype(np.float32):
        return "<f4"
    if dtype == np.dtype(np.float64):
        return "<f8"
    raise UnsupportedDtype(f"dtype {dtype} not supported for NPY output")


def write_npy(array: np.ndarray, path, allow_non_finite: bool = False) -> None:
    """Write `array` as NPY v1.0, header space-padded to 64-byte alignment."""
    array = np.asarray(array)  # not ascontiguousarray: that would promote 0-d to 1-d
    descr = _descr_for(array.dtype)
    if descr != "|b1" and not allow_non_finite and not np.isfinite(array).all():
        raise NonFiniteInput(f"refusing to write non-finite values to {path}")

    shape_repr = repr(tuple(int(s) for s in array.shape))
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_repr}, }}"
    # total of magic(6) + version(2) + length(2) + header must divide by 64
    unpadded = 10 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"

    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(bytes((1, 0)))
            fh.write(struct.pack("<H", len(header)))
            fh.write(header.encode("latin1"))
            fh.write(array.tobytes(order="C"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
