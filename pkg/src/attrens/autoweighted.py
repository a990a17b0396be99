"""Autoweighted ensembling: per-method ensemble scores from stability and
consistency evidence, then a weighted mean of standardized explanations.

Stability asks how much a method's explanation moves when the input is
perturbed with Gaussian noise; consistency asks how much it moves when the
model is swapped. Both are mapped into (0, 1] via 1 / (1 + distance) so the
weighted mean is well-posed across methods.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import EnsembleResult, ExplanationSet
from .errors import MissingEvidence
from .normalization import normalize_standard


@dataclass(frozen=True)
class PerturbationEvidence:
    """Caller-supplied explanation stacks backing the ensemble scores.

    baseline: method -> (N, C, H, W) explanations on clean inputs.
    perturbed: method -> (P, N, C, H, W) explanations on noisy inputs.
    input_distances: (P, N) input-space L2 distances ||x - x_p||.
    alt_models: method -> (M, N, C, H, W) explanations from M >= 2 models.
    """

    baseline: dict
    perturbed: dict
    input_distances: np.ndarray
    alt_models: dict

    def require(self, method):
        if method not in self.baseline or method not in self.perturbed:
            raise MissingEvidence(f"no perturbation evidence for method {method!r}")
        if method not in self.alt_models:
            raise MissingEvidence(f"no alternate-model evidence for method {method!r}")


@dataclass(frozen=True)
class EnsembleScores:
    """Per-method quality scores and the weights derived from them."""

    stability: dict
    consistency: dict
    es: dict
    weights: dict  # normalized to sum 1


def stability_score(evidence: PerturbationEvidence, method: str) -> float:
    """1 / (1 + mean ratio of explanation change to input change), in (0, 1]."""
    evidence.require(method)
    base = np.asarray(evidence.baseline[method], dtype=np.float64)
    pert = np.asarray(evidence.perturbed[method], dtype=np.float64)
    dist = np.asarray(evidence.input_distances, dtype=np.float64)
    if pert.shape[0] < 1:
        raise MissingEvidence(f"need at least one perturbation for {method!r}")
    if np.any(dist <= 0):
        raise MissingEvidence("perturbation input distances must be positive")
    # (P, N): L2 over the (C, H, W) axes of each perturbed-vs-baseline pair
    expl_dist = np.linalg.norm((pert - base[None]).reshape(pert.shape[0], pert.shape[1], -1), axis=2)
    ratio = expl_dist / dist
    return float(1.0 / (1.0 + ratio.mean()))


def consistency_score(evidence: PerturbationEvidence, method: str) -> float:
    """1 / (1 + worst per-element model disagreement), in (0, 1]."""
    evidence.require(method)
    alt = np.asarray(evidence.alt_models[method], dtype=np.float64)
    n_models = alt.shape[0]
    if n_models < 2:
        raise MissingEvidence(f"need >= 2 alternate models for {method!r}, got {n_models}")
    n_elem = int(np.prod(alt.shape[2:]))
    worst = 0.0
    for a in range(n_models):
        for b in range(a + 1, n_models):
            diff = np.linalg.norm((alt[a] - alt[b]).reshape(alt.shape[1], -1), axis=1) / n_elem
            worst = max(worst, float(diff.max()))
    return float(1.0 / (1.0 + worst))


def ensemble_scores(expl: ExplanationSet, evidence: PerturbationEvidence) -> EnsembleScores:
    """Score every method and normalize the scores into weights summing to 1."""
    stability = {m: stability_score(evidence, m) for m in expl.methods}
    consistency = {m: consistency_score(evidence, m) for m in expl.methods}
    es = {m: 0.5 * (stability[m] + consistency[m]) for m in expl.methods}
    total = sum(es.values())
    weights = {m: es[m] / total for m in expl.methods}
    return EnsembleScores(stability, consistency, es, weights)


def autoweighted_ensemble(expl: ExplanationSet, evidence: PerturbationEvidence) -> EnsembleResult:
    """Weighted mean of standardized explanations, weights from ensemble scores."""
    scores = ensemble_scores(expl, evidence)
    normalized = normalize_standard(expl)
    stack = normalized.stack()  # (E, N, C, H, W)
    w = np.array([scores.weights[m] for m in expl.methods])
    tensors = np.tensordot(w, stack, axes=(0, 0))
    return EnsembleResult(
        tensors=tensors,
        strategy="autoweighted",
        normalization="standard",
        weights=dict(scores.weights),
        diagnostics={
            "stability": dict(scores.stability),
            "consistency": dict(scores.consistency),
            "ensemble_score": dict(scores.es),
        },
    )


class AutoweightedEnsembler(BaseEstimator, TransformerMixin):
    """Estimator facade: fit() computes scores from evidence, transform() mixes."""

    def fit(self, expl: ExplanationSet, evidence: PerturbationEvidence = None):
        if evidence is None:
            raise MissingEvidence("AutoweightedEnsembler.fit needs PerturbationEvidence")
        self.scores_ = ensemble_scores(expl, evidence)
        return self

    def transform(self, expl: ExplanationSet) -> np.ndarray:
        stack = normalize_standard(expl).stack()
        w = np.array([self.scores_.weights[m] for m in expl.methods])
        return np.tensordot(w, stack, axes=(0, 0))
