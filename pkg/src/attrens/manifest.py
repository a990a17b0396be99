"""JSON manifest describing a dataset bundle of NPY files.

The manifest declares (n, c, h, w) once; every referenced array is checked
against that declaration before use. Schema errors carry JSON-pointer-style
paths to the offending field.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoweighted import PerturbationEvidence
from .core import ExplanationSet, MaskSet, validate_bundle
from .errors import ManifestSchemaError, NpyFormatError, ValidationError
from .npyio import read_npy

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class OracleConfig:
    """Oracle wiring from the manifest `oracle` block."""

    builtin_weights: str = None
    model_command: str = None
    explainer_command: str = None
    num_classes: int = None
    timeout: float = 60.0


@dataclass(frozen=True)
class Bundle:
    explanations: ExplanationSet
    masks: MaskSet = None
    inputs: np.ndarray = None
    labels: np.ndarray = None
    evidence: PerturbationEvidence = None
    oracle: OracleConfig = None


def _read(path, base, pointer, expected_shape=None):
    full = (base / path).resolve() if not Path(path).is_absolute() else Path(path)
    try:
        arr = read_npy(full)
    except FileNotFoundError as exc:
        raise ManifestSchemaError(pointer, f"referenced file not found: {full}") from exc
    except NpyFormatError as exc:
        raise ManifestSchemaError(pointer, f"{full}: {exc}") from exc
    if expected_shape is not None and arr.shape != expected_shape:
        raise ManifestSchemaError(
            pointer, f"{full}: shape {arr.shape}, expected {expected_shape}"
        )
    return arr


def load_bundle(manifest_path) -> Bundle:
    """Load and fully validate a dataset bundle from a manifest file."""
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except FileNotFoundError as exc:
        raise ManifestSchemaError("/", f"manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestSchemaError("/", f"not valid JSON: {exc}") from exc
    base = manifest_path.parent

    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ManifestSchemaError(
            "/schema_version", f"expected {SCHEMA_VERSION}, got {doc.get('schema_version')!r}"
        )
    shape = doc.get("shape")
    if not isinstance(shape, dict) or set(shape) != {"n", "c", "h", "w"}:
        raise ManifestSchemaError("/shape", "must be an object with keys n, c, h, w")
    n, c, h, w = (int(shape[k]) for k in ("n", "c", "h", "w"))

    ids = doc.get("instance_ids")
    if not isinstance(ids, list) or len(ids) != n:
        raise ManifestSchemaError("/instance_ids", f"must be a list of {n} strings")

    expl_map = doc.get("explanations")
    if not isinstance(expl_map, dict) or not expl_map:
        raise ManifestSchemaError("/explanations", "must be a non-empty object")
    data = {
        m: _read(p, base, f"/explanations/{m}", (n, c, h, w)).astype(np.float64)
        for m, p in expl_map.items()
    }
    expl = ExplanationSet(tuple(expl_map), data, tuple(ids))

    masks = None
    if "masks" in doc:
        arr = _read(doc["masks"], base, "/masks", (n, h, w))
        masks = MaskSet(arr.astype(np.float64), tuple(ids))

    inputs = None
    if "inputs" in doc:
        inputs = _read(doc["inputs"], base, "/inputs", (n, c, h, w))
    labels = None
    if "labels" in doc:
        labels = _read(doc["labels"], base, "/labels", (n,)).astype(np.int64)

    evidence = None
    if "perturbed" in doc or "alt_models" in doc:
        evidence = _load_evidence(doc, base, expl, (n, c, h, w))

    oracle = None
    if "oracle" in doc:
        blk = doc["oracle"]
        if not isinstance(blk, dict):
            raise ManifestSchemaError("/oracle", "must be an object")
        oracle = OracleConfig(
            builtin_weights=blk.get("builtin_weights"),
            model_command=blk.get("model_command"),
            explainer_command=blk.get("explainer_command"),
            num_classes=blk.get("num_classes"),
            timeout=float(blk.get("timeout", 60.0)),
        )
        if oracle.builtin_weights is not None:
            path = base / oracle.builtin_weights
            if not Path(path).exists():
                raise ManifestSchemaError("/oracle/builtin_weights", f"file not found: {path}")

    violations = validate_bundle(expl, masks)
    if violations:
        raise ValidationError("; ".join(violations))
    return Bundle(expl, masks, inputs, labels, evidence, oracle)


def _load_evidence(doc, base, expl, nchw):
    n, c, h, w = nchw
    pert_map = doc.get("perturbed")
    alt_map = doc.get("alt_models")
    if pert_map is None or alt_map is None:
        raise ManifestSchemaError(
            "/perturbed", "perturbed and alt_models must be provided together"
        )
    if "input_distances" not in doc:
        raise ManifestSchemaError("/input_distances", "required when perturbed is present")

    perturbed, alts = {}, {}
    n_pert = None
    for m, paths in pert_map.items():
        if m not in expl.data:
            raise ManifestSchemaError(f"/perturbed/{m}", "unknown method")
        stacks = [
            _read(p, base, f"/perturbed/{m}/{i}", (n, c, h, w)) for i, p in enumerate(paths)
        ]
        if n_pert is None:
            n_pert = len(stacks)
        elif len(stacks) != n_pert:
            raise ManifestSchemaError(f"/perturbed/{m}", "perturbation counts differ across methods")
        perturbed[m] = np.stack(stacks)
    for m, paths in alt_map.items():
        if m not in expl.data:
            raise ManifestSchemaError(f"/alt_models/{m}", "unknown method")
        alts[m] = np.stack(
            [_read(p, base, f"/alt_models/{m}/{i}", (n, c, h, w)) for i, p in enumerate(paths)]
        )
    missing = set(expl.methods) - set(perturbed)
    if missing:
        raise ManifestSchemaError("/perturbed", f"missing methods: {sorted(missing)}")
    missing = set(expl.methods) - set(alts)
    if missing:
        raise ManifestSchemaError("/alt_models", f"missing methods: {sorted(missing)}")

    distances = _read(doc["input_distances"], base, "/input_distances", (n_pert, n))
    return PerturbationEvidence(
        baseline={m: np.asarray(expl.data[m]) for m in expl.methods},
        perturbed=perturbed,
        input_distances=distances,
        alt_models=alts,
    )
