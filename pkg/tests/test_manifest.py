import json

import numpy as np
import pytest

from attrens import load_bundle, validate_bundle, write_npy
from attrens.errors import ManifestSchemaError, ValidationError

from conftest import random_masks, random_set, write_manifest
from test_autoweighted import make_evidence


class TestLoadBundle:
    def test_minimal_manifest(self, tmp_path, rng):
        expl = random_set(rng, methods=("only",))
        path = write_manifest(tmp_path, expl)
        bundle = load_bundle(path)
        assert bundle.explanations.methods == ("only",)
        np.testing.assert_array_equal(
            np.asarray(bundle.explanations.data["only"]), np.asarray(expl.data["only"])
        )
        assert bundle.masks is None and bundle.evidence is None

    def test_full_bundle(self, tmp_path, rng):
        expl = random_set(rng, n=3, methods=("a", "b"))
        masks = random_masks(rng, expl)
        inputs = rng.standard_normal((3, 1, 4, 4))
        labels = np.arange(3)
        evidence = make_evidence(expl)
        path = write_manifest(
            tmp_path, expl, masks=masks, inputs=inputs, labels=labels, evidence=evidence,
            oracle={"num_classes": 4, "model_command": "x {input} {output}"},
        )
        bundle = load_bundle(path)
        assert bundle.masks is not None and bundle.inputs.shape == (3, 1, 4, 4)
        assert list(bundle.labels) == [0, 1, 2]
        assert bundle.evidence.perturbed["a"].shape[0] == 2
        assert bundle.oracle.num_classes == 4

    def test_loaded_bundle_always_validates(self, tmp_path, rng):
        expl = random_set(rng, n=4)
        masks = random_masks(rng, expl)
        bundle = load_bundle(write_manifest(tmp_path, expl, masks=masks))
        assert validate_bundle(bundle.explanations, bundle.masks) == []

    def test_missing_file_names_path(self, tmp_path, rng):
        expl = random_set(rng)
        path = write_manifest(tmp_path, expl)
        doc = json.loads(path.read_text())
        doc["explanations"]["a"] = "missing.npy"
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestSchemaError, match="/explanations/a"):
            load_bundle(path)

    def test_mismatched_n_across_methods(self, tmp_path, rng):
        expl = random_set(rng, n=3)
        path = write_manifest(tmp_path, expl)
        write_npy(rng.standard_normal((2, 1, 4, 4)), tmp_path / "expl_b.npy")
        with pytest.raises(ManifestSchemaError, match="/explanations/b"):
            load_bundle(path)

    def test_wrong_schema_version(self, tmp_path, rng):
        path = write_manifest(tmp_path, random_set(rng))
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestSchemaError, match="/schema_version"):
            load_bundle(path)

    def test_bad_shape_block(self, tmp_path, rng):
        path = write_manifest(tmp_path, random_set(rng))
        doc = json.loads(path.read_text())
        del doc["shape"]["w"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestSchemaError, match="/shape"):
            load_bundle(path)

    def test_nonexistent_manifest(self, tmp_path):
        with pytest.raises(ManifestSchemaError):
            load_bundle(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ManifestSchemaError):
            load_bundle(path)

    def test_nan_in_explanations_rejected(self, tmp_path, rng):
        expl = random_set(rng)
        arr = np.asarray(expl.data["a"]).copy()
        arr[0, 0, 0, 0] = np.nan
        path = write_manifest(tmp_path, expl)
        write_npy(arr, tmp_path / "expl_a.npy", allow_non_finite=True)
        with pytest.raises(ValidationError):
            load_bundle(path)

    def test_perturbed_without_distances(self, tmp_path, rng):
        expl = random_set(rng)
        path = write_manifest(tmp_path, expl, evidence=make_evidence(expl))
        doc = json.loads(path.read_text())
        del doc["input_distances"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestSchemaError, match="/input_distances"):
            load_bundle(path)

    def test_evidence_missing_method(self, tmp_path, rng):
        expl = random_set(rng, methods=("a", "b"))
        path = write_manifest(tmp_path, expl, evidence=make_evidence(expl))
        doc = json.loads(path.read_text())
        del doc["perturbed"]["b"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestSchemaError, match="missing methods"):
            load_bundle(path)
