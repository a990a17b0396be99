"""Whole-set normalization of attribution stacks, one method at a time.

Three transforms are offered: normal standardization (subtract mean, divide
by std), robust standardization (subtract median, divide by IQR) and
second-moment scaling (divide by the channel-averaged std, no centering).
Statistics are always pooled over the entire set of a method's values, never
per instance. Only second-moment scaling is guaranteed to preserve signs.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import ExplanationSet, compute_stats
from .errors import DegenerateSpread

EPS = 1e-12

KINDS = ("standard", "robust", "second-moment", "none")


def _apply(expl, transform, dtype):
    out = {}
    for m in expl.methods:
        arr = np.asarray(expl.data[m], dtype=np.float64)
        out[m] = transform(m, arr).astype(dtype)
    return expl.with_data(out)


def normalize_standard(expl: ExplanationSet, dtype=np.float64) -> ExplanationSet:
    """(x - mean) / std per method; raises DegenerateSpread on ~constant data."""

    def transform(m, arr):
        stats = compute_stats(expl, m)
        if stats.std <= EPS:
            raise DegenerateSpread(m, "std", stats.std)
        return (arr - stats.mean) / stats.std

    return _apply(expl, transform, dtype)


def normalize_robust(expl: ExplanationSet, dtype=np.float64) -> ExplanationSet:
    """(x - median) / IQR per method; raises DegenerateSpread when IQR ~ 0."""

    def transform(m, arr):
        stats = compute_stats(expl, m)
        if stats.iqr <= EPS:
            raise DegenerateSpread(m, "iqr", stats.iqr)
        return (arr - stats.median) / stats.iqr

    return _apply(expl, transform, dtype)


def normalize_second_moment(expl: ExplanationSet, dtype=np.float64) -> ExplanationSet:
    """x / avg_over_channels(per-channel std); no centering, signs preserved."""

    def transform(m, arr):
        stats = compute_stats(expl, m)
        scale = float(stats.per_channel_std.mean())
        if scale <= EPS:
            raise DegenerateSpread(m, "channel-averaged std", scale)
        return arr / scale

    return _apply(expl, transform, dtype)


def normalize(expl: ExplanationSet, kind: str, dtype=np.float64) -> ExplanationSet:
    """Dispatch by kind name; kind='none' passes data through (dtype cast only)."""
    if kind == "standard":
        return normalize_standard(expl, dtype)
    if kind == "robust":
        return normalize_robust(expl, dtype)
    if kind == "second-moment":
        return normalize_second_moment(expl, dtype)
    if kind == "none":
        return _apply(expl, lambda m, a: a, dtype)
    raise ValueError(f"unknown normalization kind {kind!r}, expected one of {KINDS}")


class ExplanationNormalizer(BaseEstimator, TransformerMixin):
    """sklearn-style wrapper: fit records per-method statistics, transform applies them.

    Unlike the plain functions, a fitted normalizer can be applied to a second
    set with the statistics of the first (train-only normalization).
    """

    def __init__(self, kind="standard", dtype=np.float64):
        self.kind = kind
        self.dtype = dtype

    def fit(self, expl: ExplanationSet, y=None):
        if self.kind not in KINDS:
            raise ValueError(f"unknown normalization kind {self.kind!r}")
        self.stats_ = {m: compute_stats(expl, m) for m in expl.methods}
        return self

    def transform(self, expl: ExplanationSet) -> ExplanationSet:
        def transform(m, arr):
            stats = self.stats_[m]
            if self.kind == "standard":
                if stats.std <= EPS:
                    raise DegenerateSpread(m, "std", stats.std)
                return (arr - stats.mean) / stats.std
            if self.kind == "robust":
                if stats.iqr <= EPS:
                    raise DegenerateSpread(m, "iqr", stats.iqr)
                return (arr - stats.median) / stats.iqr
            if self.kind == "second-moment":
                scale = float(stats.per_channel_std.mean())
                if scale <= EPS:
                    raise DegenerateSpread(m, "channel-averaged std", scale)
                return arr / scale
            return arr

        return _apply(expl, transform, self.dtype)
