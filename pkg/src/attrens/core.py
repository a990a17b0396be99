"""Shared data model: explanation stacks, masks and descriptive statistics.

An attribution map for one instance is a plain ndarray of shape (C, H, W)
holding signed importance scores. A full dataset is an ExplanationSet:
per-method stacks of shape (N, C, H, W), aligned by instance index.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyData, ShapeMismatch, UnknownMethod


@dataclass(frozen=True)
class ExplanationSet:
    """Per-method attribution stacks for the same N instances.

    `data` maps method name -> array of shape (N, C, H, W); all methods share
    one shape. `instance_ids` carry the alignment to masks/inputs.
    """

    methods: tuple
    data: dict
    instance_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "instance_ids", tuple(str(i) for i in self.instance_ids))
        if not self.methods:
            raise EmptyData("an ExplanationSet needs at least one method")
        if len(set(self.methods)) != len(self.methods):
            raise ShapeMismatch("duplicate method identifiers")
        if set(self.methods) != set(self.data):
            raise ShapeMismatch("method list and data keys disagree")
        shapes = {m: np.asarray(self.data[m]).shape for m in self.methods}
        ref = shapes[self.methods[0]]
        if len(ref) != 4:
            raise ShapeMismatch(f"expected (N, C, H, W) stacks, got shape {ref}")
        for m, s in shapes.items():
            if s != ref:
                raise ShapeMismatch(f"method {m!r} has shape {s}, expected {ref}")
        if ref[0] != len(self.instance_ids):
            raise ShapeMismatch(
                f"{len(self.instance_ids)} instance ids vs {ref[0]} instances in data"
            )

    @property
    def n_instances(self):
        return len(self.instance_ids)

    @property
    def shape(self):
        """(C, H, W) of a single attribution map."""
        return self.data[self.methods[0]].shape[1:]

    def stack(self) -> np.ndarray:
        """All methods as one (E, N, C, H, W) array, in method order."""
        return np.stack([np.asarray(self.data[m]) for m in self.methods])

    def with_data(self, new_data: dict) -> "ExplanationSet":
        return ExplanationSet(self.methods, new_data, self.instance_ids)


@dataclass(frozen=True)
class MaskSet:
    """Binary (N, H, W) segmentation masks aligned with an ExplanationSet."""

    masks: np.ndarray
    instance_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "masks", np.asarray(self.masks))
        object.__setattr__(self, "instance_ids", tuple(str(i) for i in self.instance_ids))
        if self.masks.ndim != 3:
            raise ShapeMismatch(f"masks must be (N, H, W), got {self.masks.shape}")
        if self.masks.shape[0] != len(self.instance_ids):
            raise ShapeMismatch("mask count does not match instance ids")

    @property
    def n_instances(self):
        return len(self.instance_ids)


@dataclass(frozen=True)
class StatSummary:
    """Whole-set statistics of one method's attributions."""

    mean: float
    std: float
    median: float
    iqr: float
    per_channel_std: np.ndarray


@dataclass(frozen=True)
class EnsembleResult:
    """Ensembled attributions plus provenance of how they were produced."""

    tensors: np.ndarray  # (N, C, H, W); C = 1 for the supervised strategy
    strategy: str  # "norm" | "autoweighted" | "supervised"
    normalization: str  # "standard" | "robust" | "second-moment" | "none"
    aggregator: str = None
    weights: dict = None
    diagnostics: dict = field(default_factory=dict)


def validate_bundle(expl: ExplanationSet, masks: MaskSet = None) -> list:
    """Report structural violations of a dataset bundle.

    Returns a list of human-readable violation strings; an empty list means
    every downstream operation will accept the bundle without shape errors.
    This never raises: callers decide what a violation costs.
    """
    violations = []
    for m in expl.methods:
        arr = np.asarray(expl.data[m])
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            violations.append(
                f"non-finite value at (method {m!r}, instance {bad[0]}, index {tuple(bad[1:])})"
            )
    if masks is not None:
        c, h, w = expl.shape
        if masks.masks.shape[1:] != (h, w):
            violations.append(
                f"mask/explanation shape mismatch: masks {masks.masks.shape[1:]} vs ({h}, {w})"
            )
        if masks.n_instances != expl.n_instances:
            violations.append(
                f"mask count {masks.n_instances} vs {expl.n_instances} instances"
            )
        elif masks.instance_ids != expl.instance_ids:
            violations.append("instance id misalignment between masks and explanations")
        vals = np.unique(masks.masks)
        if not np.isin(vals, (0, 1)).all():
            violations.append(f"non-binary mask values: {vals[:8]}")
    return violations


def compute_stats(expl: ExplanationSet, method: str) -> StatSummary:
    """Descriptive statistics of one method over all N*C*H*W values.

    Standard deviation is the population std (divisor = element count);
    quartiles use linear interpolation between order statistics.
    per_channel_std pools (N, H, W) separately for each channel.
    """
    if method not in expl.data:
        raise UnknownMethod(f"method {method!r} not in {list(expl.methods)}")
    arr = np.asarray(expl.data[method], dtype=np.float64)
    if arr.size < 2:
        raise EmptyData("need at least 2 scalar elements for statistics")
    q1, q3 = np.quantile(arr, [0.25, 0.75], method="linear")
    return StatSummary(
        mean=float(arr.mean()),
        std=float(arr.std()),
        median=float(np.median(arr)),
        iqr=float(q3 - q1),
        per_channel_std=arr.std(axis=(0, 2, 3)),
    )
