"""Elementwise aggregation of normalized explanations (max/min/avg/max-abs)."""

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import EnsembleResult, ExplanationSet, validate_bundle
from .errors import CancellationWarning, EmptyData, ShapeMismatch, ValidationError
from .normalization import KINDS, normalize

AGGREGATORS = ("max", "min", "avg", "max-abs")

# thresholds of the averaging-cancellation diagnostic: warn when >10% of
# elements retain <1% of their mean component magnitude
_CANCEL_MAG_RATIO = 0.01
_CANCEL_FRACTION = 0.10


def aggregate(tensors, kind: str) -> np.ndarray:
    """Reduce a list of same-shaped attribution maps elementwise.

    max-abs keeps the signed value whose magnitude is largest; ties go to
    the earlier entry in the list.
    """
    if len(tensors) == 0:
        raise EmptyData("cannot aggregate an empty list of tensors")
    shapes = {np.asarray(t).shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeMismatch(f"mixed shapes in aggregation: {sorted(shapes)}")
    stack = np.stack([np.asarray(t) for t in tensors])
    if kind == "max":
        return stack.max(axis=0)
    if kind == "min":
        return stack.min(axis=0)
    if kind == "avg":
        # anchored mean: exact when all methods agree (idempotence), and a
        # fixed-order reduction so results never depend on thread count
        return stack[0] + (stack - stack[0]).mean(axis=0)
    if kind == "max-abs":
        # argmax returns the first maximum, which realizes the earlier-method tie-break
        idx = np.abs(stack).argmax(axis=0)
        return np.take_along_axis(stack, idx[None], axis=0)[0]
    raise ValueError(f"unknown aggregator {kind!r}, expected one of {AGGREGATORS}")


def cancellation_fraction(stack: np.ndarray) -> float:
    """Fraction of elements whose mean-aggregate magnitude collapses.

    `stack` has the method axis first. An element counts as cancelled when
    |mean| is below 1% of the mean absolute component value.
    """
    agg = stack.mean(axis=0)
    comp = np.abs(stack).mean(axis=0)
    cancelled = (np.abs(agg) < _CANCEL_MAG_RATIO * comp) & (comp > 0)
    return float(cancelled.mean())


def norm_ensemble_xai(expl: ExplanationSet, normalization="standard", aggregator="avg") -> EnsembleResult:
    """Normalize each method over the whole set, then reduce across methods.

    With the averaging aggregator a cancellation diagnostic is attached (and a
    CancellationWarning emitted) when opposite-signed components wipe each
    other out on a substantial share of elements.
    """
    violations = validate_bundle(expl)
    if violations:
        raise ValidationError("; ".join(violations))
    normalized = normalize(expl, normalization)
    stack = normalized.stack()  # (E, N, C, H, W)
    tensors = aggregate(list(stack), aggregator)

    diagnostics = {}
    if aggregator == "avg":
        frac = cancellation_fraction(stack)
        diagnostics["cancellation_fraction"] = frac
        if frac > _CANCEL_FRACTION:
            warnings.warn(
                f"{frac:.1%} of elements lost >99% of their component magnitude "
                "under averaging; opposite-signed attributions are cancelling",
                CancellationWarning,
            )
    return EnsembleResult(
        tensors=tensors,
        strategy="norm",
        normalization=normalization,
        aggregator=aggregator,
        diagnostics=diagnostics,
    )


class NormEnsembleXAI(BaseEstimator, TransformerMixin):
    """Estimator facade over norm_ensemble_xai.

    fit() validates the bundle; transform() returns the ensembled (N, C, H, W)
    array. Kept stateless apart from validation so it composes in pipelines.
    """

    def __init__(self, normalization="standard", aggregator="avg"):
        self.normalization = normalization
        self.aggregator = aggregator

    def fit(self, expl: ExplanationSet, y=None):
        if self.normalization not in KINDS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        violations = validate_bundle(expl)
        if violations:
            raise ValidationError("; ".join(violations))
        self.n_methods_ = len(expl.methods)
        return self

    def transform(self, expl: ExplanationSet) -> np.ndarray:
        return norm_ensemble_xai(expl, self.normalization, self.aggregator).tensors
