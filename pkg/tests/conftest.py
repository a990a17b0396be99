import json

import numpy as np
import pytest

from attrens import ExplanationSet, MaskSet, write_npy


def make_set(arrays, instance_ids=None):
    """ExplanationSet from {method: (N, C, H, W) array-like}."""
    first = np.asarray(next(iter(arrays.values())))
    n = first.shape[0]
    if instance_ids is None:
        instance_ids = [f"i{k}" for k in range(n)]
    return ExplanationSet(tuple(arrays), {m: np.asarray(a, dtype=np.float64) for m, a in arrays.items()}, tuple(instance_ids))


def random_set(rng, n=3, methods=("a", "b"), c=1, h=4, w=4, scale=1.0):
    return make_set({m: rng.standard_normal((n, c, h, w)) * scale for m in methods})


def random_masks(rng, expl):
    _, h, w = expl.shape
    masks = (rng.uniform(size=(expl.n_instances, h, w)) > 0.5).astype(np.float64)
    masks[:, 0, 0] = 1.0  # never fully empty
    return MaskSet(masks, expl.instance_ids)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_manifest(tmp_path, expl, masks=None, inputs=None, labels=None,
                   evidence=None, oracle=None, name="manifest.json"):
    """Serialize a bundle into NPY files + manifest JSON under tmp_path."""
    n = expl.n_instances
    c, h, w = expl.shape
    doc = {
        "schema_version": 1,
        "shape": {"n": n, "c": c, "h": h, "w": w},
        "instance_ids": list(expl.instance_ids),
        "explanations": {},
    }
    for m in expl.methods:
        fname = f"expl_{m}.npy"
        write_npy(np.asarray(expl.data[m], dtype=np.float64), tmp_path / fname)
        doc["explanations"][m] = fname
    if masks is not None:
        write_npy(np.asarray(masks.masks, dtype=np.float64), tmp_path / "masks.npy")
        doc["masks"] = "masks.npy"
    if inputs is not None:
        write_npy(np.asarray(inputs, dtype=np.float64), tmp_path / "inputs.npy")
        doc["inputs"] = "inputs.npy"
    if labels is not None:
        write_npy(np.asarray(labels, dtype=np.float64), tmp_path / "labels.npy")
        doc["labels"] = "labels.npy"
    if evidence is not None:
        doc["perturbed"] = {}
        doc["alt_models"] = {}
        for m in expl.methods:
            pert = np.asarray(evidence.perturbed[m])
            paths = []
            for p in range(pert.shape[0]):
                fname = f"pert_{m}_{p}.npy"
                write_npy(pert[p].astype(np.float64), tmp_path / fname)
                paths.append(fname)
            doc["perturbed"][m] = paths
            alt = np.asarray(evidence.alt_models[m])
            paths = []
            for k in range(alt.shape[0]):
                fname = f"alt_{m}_{k}.npy"
                write_npy(alt[k].astype(np.float64), tmp_path / fname)
                paths.append(fname)
            doc["alt_models"][m] = paths
        write_npy(np.asarray(evidence.input_distances, dtype=np.float64),
                  tmp_path / "input_distances.npy")
        doc["input_distances"] = "input_distances.npy"
    if oracle is not None:
        doc["oracle"] = oracle
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path
