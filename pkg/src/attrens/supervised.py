"""Supervised ensembling: regress flattened explanations onto segmentation masks.

Per instance, every method's second-moment-scaled explanation is flattened and
concatenated into one design row; the flattened binary mask is the target.
A weighted multi-output kernel ridge regression maps rows to masks, with
instance weights inversely proportional to mask area. Out-of-fold prediction
keeps each instance out of the training set of the model that predicts it.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .core import EnsembleResult, ExplanationSet, MaskSet, validate_bundle
from .errors import EmptyMaskWarning, MissingMasks, TooFewInstances, ValidationError
from .krr import DEFAULT_BYTE_BUDGET, Kernel, WeightedKernelRidge
from .normalization import normalize_second_moment


@dataclass(frozen=True)
class SupervisedDesign:
    """Regression dataset built from an explanation bundle.

    X: (N, E*C*H*W) scaled, flattened, method-concatenated explanations.
    Y: (N, H*W) flattened masks. weights: length-N, mean 1.
    """

    X: np.ndarray
    Y: np.ndarray
    weights: np.ndarray


def mask_weights(masks: MaskSet) -> np.ndarray:
    """Per-instance weights inversely proportional to mask area, rescaled to mean 1.

    Empty masks are clamped to area 1 (with a warning) instead of producing
    an infinite weight.
    """
    areas = np.asarray(masks.masks, dtype=np.float64).sum(axis=(1, 2))
    if np.any(areas == 0):
        warnings.warn(
            f"{int((areas == 0).sum())} empty mask(s); clamping area to 1",
            EmptyMaskWarning,
        )
    raw = 1.0 / np.maximum(areas, 1.0)
    return raw / raw.mean()


def build_design(expl: ExplanationSet, masks: MaskSet) -> SupervisedDesign:
    """Assemble (X, Y, weights) with second-moment pre-scaling of explanations."""
    if masks is None:
        raise MissingMasks("the supervised strategy requires segmentation masks")
    violations = validate_bundle(expl, masks)
    if violations:
        raise ValidationError("; ".join(violations))
    scaled = normalize_second_moment(expl)
    n = expl.n_instances
    # (E, N, C*H*W) -> (N, E*C*H*W), method blocks in method order
    stack = scaled.stack().reshape(len(expl.methods), n, -1)
    X = np.concatenate(list(stack), axis=1)
    Y = np.asarray(masks.masks, dtype=np.float64).reshape(n, -1)
    return SupervisedDesign(X=X, Y=Y, weights=mask_weights(masks))


def fold_indices(n: int, folds: int):
    """Contiguous, near-equal fold index arrays covering range(n)."""
    bounds = np.linspace(0, n, folds + 1).astype(int)
    return [np.arange(bounds[i], bounds[i + 1]) for i in range(folds)]


def supervised_xai(expl: ExplanationSet, masks: MaskSet, kernel=Kernel(), ridge=1.0,
                   folds=5, byte_budget=DEFAULT_BYTE_BUDGET, radial_profile=False,
                   parallel_map=map) -> EnsembleResult:
    """Out-of-fold supervised ensembling.

    `folds` is either an int >= 2 (k-fold: each instance predicted by the
    model trained on the other folds) or a float in (0, 1) (holdout fraction:
    one model trained on the leading 1-f share predicts everything; training
    instances are then predicted in-sample, which is recorded in diagnostics).

    Predictions are clamped to [0, 1]; the pre-clamp out-of-range fraction is
    reported. Output maps are single-channel, shape (N, 1, H, W).
    """
    design = build_design(expl, masks)
    n = expl.n_instances
    _, h, w = expl.shape

    if isinstance(folds, float):
        if not 0.0 < folds < 1.0:
            raise ValueError("holdout fraction must lie in (0, 1)")
        n_test = max(1, int(round(folds * n)))
        if n_test >= n:
            raise TooFewInstances("holdout split leaves no training instances")
        train = np.arange(0, n - n_test)
        jobs = [(train, np.arange(n))]
        train_indices = train
    else:
        if folds < 2:
            raise ValueError("need at least 2 folds")
        if n < folds:
            raise TooFewInstances(f"{n} instances cannot fill {folds} folds")
        splits = fold_indices(n, folds)
        all_idx = np.arange(n)
        jobs = [(np.setdiff1d(all_idx, test), test) for test in splits]
        train_indices = None

    def run_fold(job):
        train, test = job
        assert not np.intersect1d(train, test).size or train_indices is not None
        model = WeightedKernelRidge(kernel=kernel, ridge=ridge, byte_budget=byte_budget)
        # renormalize to mean 1 over the training rows only, so a held-out
        # instance's mask can never influence the model that predicts it
        w = design.weights[train]
        model.fit(design.X[train], design.Y[train], sample_weight=w / w.mean())
        return test, model.predict(design.X[test])

    raw = np.empty((n, h * w))
    for test, pred in parallel_map(run_fold, jobs):
        raw[test] = pred

    overflow = float(((raw < 0.0) | (raw > 1.0)).mean())
    clamped = np.clip(raw, 0.0, 1.0).reshape(n, 1, h, w)

    diagnostics = {"pre_clamp_out_of_range_fraction": overflow}
    if train_indices is not None:
        diagnostics["holdout_train_indices"] = train_indices.tolist()
    if radial_profile:
        diagnostics["center_bias_radial_profile"] = _radial_profile(clamped.mean(axis=(0, 1)))
    return EnsembleResult(
        tensors=clamped,
        strategy="supervised",
        normalization="second-moment",
        diagnostics=diagnostics,
    )


def _radial_profile(mean_map: np.ndarray, bins: int = 10):
    """Mean attribution by normalized distance from the image center."""
    h, w = mean_map.shape
    yy, xx = np.mgrid[0:h, 0:w]
    r = np.hypot((yy - (h - 1) / 2) / max(h - 1, 1), (xx - (w - 1) / 2) / max(w - 1, 1))
    r = r / r.max() if r.max() > 0 else r
    edges = np.linspace(0, 1, bins + 1)
    profile = []
    for i in range(bins):
        sel = (r >= edges[i]) & (r <= edges[i + 1] if i == bins - 1 else r < edges[i + 1])
        profile.append(float(mean_map[sel].mean()) if sel.any() else None)
    return profile


class SupervisedXAIRegressor(BaseEstimator, RegressorMixin):
    """Estimator facade: fit() trains one KRR on a bundle, predict() maps new bundles.

    For leak-free evaluation on the training bundle use the module-level
    supervised_xai(), which does out-of-fold prediction.
    """

    def __init__(self, kernel=Kernel(), ridge=1.0, byte_budget=DEFAULT_BYTE_BUDGET):
        self.kernel = kernel
        self.ridge = ridge
        self.byte_budget = byte_budget

    def fit(self, expl: ExplanationSet, masks: MaskSet):
        design = build_design(expl, masks)
        self.model_ = WeightedKernelRidge(
            kernel=self.kernel, ridge=self.ridge, byte_budget=self.byte_budget
        )
        self.model_.fit(design.X, design.Y, sample_weight=design.weights)
        self.spatial_shape_ = expl.shape[1:]
        return self

    def predict(self, expl: ExplanationSet) -> np.ndarray:
        scaled = normalize_second_moment(expl)
        n = expl.n_instances
        stack = scaled.stack().reshape(len(expl.methods), n, -1)
        X = np.concatenate(list(stack), axis=1)
        h, w = self.spatial_shape_
        return np.clip(self.model_.predict(X), 0.0, 1.0).reshape(n, 1, h, w)
