"""Attribution-quality metrics: faithfulness, randomization, robustness,
complexity and localization.

Conventions: spatial metrics reduce channels by summed absolute value before
argmax/ordering; the randomization similarity uses the signed channel sum so
anti-correlated maps can score negatively. All randomized metrics are
deterministic given their seed.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllZeroAttribution,
    NonPositiveInitialScore,
    OracleConfigError,
    SingleClassModel,
    TieBreakWarning,
)

LOWER_BETTER = {"fa", "ra", "ro"}
HIGHER_BETTER = {"co", "lo"}
ALL_METRICS = ("fa", "ra", "ro", "co", "lo")


def _channel_abs(attr):
    return np.abs(np.asarray(attr, dtype=np.float64)).sum(axis=0)


def _channel_sum(attr):
    return np.asarray(attr, dtype=np.float64).sum(axis=0)


def pointing_game(attr, mask) -> int:
    """1 iff the maximal-attribution pixel falls inside the binary mask."""
    heat = _channel_abs(attr)
    mask = np.asarray(mask)
    if heat.shape != mask.shape:
        raise ValueError(f"attribution {heat.shape} vs mask {mask.shape}")
    if np.all(heat == heat.flat[0]):
        warnings.warn("attribution has no unique argmax; using first index", TieBreakWarning)
    idx = np.unravel_index(heat.argmax(), heat.shape)
    return int(mask[idx] != 0)


def sparseness_gini(attr) -> float:
    """Gini index of sorted absolute attributions: 0 = uniform, (n-1)/n = one-hot."""
    a = np.sort(np.abs(np.asarray(attr, dtype=np.float64)).ravel())
    total = a.sum()
    if total == 0:
        raise AllZeroAttribution("cannot compute sparseness of an all-zero attribution")
    n = a.size
    i = np.arange(1, n + 1)
    return float(((2 * i - n - 1) * a).sum() / (n * total))


def pixel_flipping(attr, input_tensor, label, model, steps, baseline=0.0) -> float:
    """Mean retained class score while flipping pixels in attribution order.

    Pixels are sorted by descending channel-summed |attribution| and replaced
    by the baseline in `steps` near-equal batches; the score is the mean over
    steps of f(x_flipped) / f(x), each term clamped below at 0. Lower means
    the ordering found the evidence faster, i.e. a more faithful attribution.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(input_tensor, dtype=np.float64)
    heat = _channel_abs(attr)
    h, w = heat.shape
    if steps > h * w:
        raise ValueError(f"steps={steps} exceeds {h * w} pixels")
    if np.all(heat == heat.flat[0]):
        warnings.warn("uniform attribution; flipping in index order", TieBreakWarning)
    # stable sort keeps index order among ties
    order = np.argsort(-heat.ravel(), kind="stable")

    f0 = float(model.predict(x[None])[0, label])
    if f0 <= 0:
        raise NonPositiveInitialScore(f"initial class score {f0} is not positive")

    batches = np.array_split(order, steps)
    flipped = x.copy().reshape(x.shape[0], -1)
    total = 0.0
    for batch in batches:
        flipped[:, batch] = baseline
        fk = float(model.predict(flipped.reshape(x.shape)[None])[0, label])
        total += max(fk / f0, 0.0)
    return total / steps


def _ssim_global(a, b) -> float:
    """Single-window SSIM with C1=(0.01 L)^2, C2=(0.03 L)^2, L = joint range."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    value_range = hi - lo
    if value_range == 0:
        value_range = 1.0  # both constant; constants stabilize the ratio to 1
    c1 = (0.01 * value_range) ** 2
    c2 = (0.03 * value_range) ** 2
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = ((a - mu_a) * (b - mu_b)).mean()
    return float(
        ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
        / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    )


def random_logit(attr_true, input_tensor, label, model, explainer, rng_seed=0) -> float:
    """Similarity between the true-class map and a random-other-class map.

    The comparison class is drawn uniformly from the non-label classes with
    the given seed. Low similarity is desirable: a sound explainer should
    explain different classes differently.
    """
    if model.num_classes < 2:
        raise SingleClassModel("random logit needs at least 2 classes")
    rng = np.random.default_rng(rng_seed)
    others = [c for c in range(model.num_classes) if c != label]
    other = int(rng.choice(others))
    attr_other = explainer.explain(np.asarray(input_tensor)[None], other)[0]
    return _ssim_global(_channel_sum(attr_true), _channel_sum(attr_other))


def local_lipschitz(attr, input_tensor, label, explainer, samples=16, radius=None,
                    rng_seed=0) -> float:
    """Worst observed ratio of explanation change to input change.

    Perturbations are drawn uniformly from the L2 ball of the given radius
    (default 0.1 * ||x|| / sqrt(n)) around the input.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = np.asarray(input_tensor, dtype=np.float64)
    n = x.size
    if radius is None:
        radius = 0.1 * np.linalg.norm(x) / np.sqrt(n)
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(rng_seed)
    base = explainer.explain(x[None], label)[0]
    worst = 0.0
    for _ in range(samples):
        direction = rng.standard_normal(x.shape)
        norm = np.linalg.norm(direction)
        if norm == 0:
            continue
        # uniform in the ball: scale a unit direction by radius * U^(1/n)
        delta = direction / norm * radius * rng.uniform() ** (1.0 / n)
        if np.linalg.norm(delta) == 0:
            continue
        perturbed_attr = explainer.explain((x + delta)[None], label)[0]
        ratio = np.linalg.norm(perturbed_attr - base) / np.linalg.norm(delta)
        worst = max(worst, float(ratio))
    return worst


@dataclass
class MetricReport:
    """Per-instance scores and dataset summaries, keyed by metric name."""

    per_instance: dict  # metric -> list (None where the instance was skipped)
    summary: dict = field(default_factory=dict)  # metric -> {mean, std, skipped, n_scored}

    def as_dict(self):
        return {"per_instance": self.per_instance, "summary": self.summary}


def evaluate_all(tensors, masks=None, inputs=None, labels=None, model=None,
                 explainer=None, metrics=("co", "lo"), seed=0, steps=8,
                 baseline=0.0, samples=16, radius=None,
                 parallel_map=map) -> MetricReport:
    """Score every instance on the selected metrics and summarize mean +- std.

    `tensors` is the (N, C, H, W) stack of maps to score. Localization and
    complexity need no oracles; faithfulness needs a model; randomization a
    model and explainer; robustness an explainer. Instances failing a metric
    are excluded from that metric's summary and counted as skipped. A metric
    where every instance fails raises.
    """
    tensors = np.asarray(tensors, dtype=np.float64)
    n = tensors.shape[0]
    metrics = tuple(metrics)
    for m in metrics:
        if m not in ALL_METRICS:
            raise ValueError(f"unknown metric {m!r}")
    _require(metrics, "fa", model=model, inputs=inputs, labels=labels)
    _require(metrics, "ra", model=model, explainer=explainer, inputs=inputs, labels=labels)
    _require(metrics, "ro", explainer=explainer, inputs=inputs, labels=labels)
    _require(metrics, "lo", masks=masks)

    def score_instance(i):
        row = {}
        for metric in metrics:
            try:
                if metric == "co":
                    row[metric] = sparseness_gini(tensors[i])
                elif metric == "lo":
                    row[metric] = float(pointing_game(tensors[i], masks.masks[i]))
                elif metric == "fa":
                    row[metric] = pixel_flipping(
                        tensors[i], inputs[i], int(labels[i]), model, steps, baseline
                    )
                elif metric == "ra":
                    row[metric] = random_logit(
                        tensors[i], inputs[i], int(labels[i]), model, explainer,
                        rng_seed=seed + i,
                    )
                elif metric == "ro":
                    row[metric] = local_lipschitz(
                        tensors[i], inputs[i], int(labels[i]) if labels is not None else 0,
                        explainer, samples, radius, rng_seed=seed + i,
                    )
            except (AllZeroAttribution, NonPositiveInitialScore) as exc:
                warnings.warn(f"instance {i} skipped for {metric}: {exc}")
                row[metric] = None
        return row

    rows = list(parallel_map(score_instance, range(n)))
    per_instance = {m: [rows[i][m] for i in range(n)] for m in metrics}
    summary = {}
    for m in metrics:
        scored = [v for v in per_instance[m] if v is not None]
        if not scored:
            raise OracleConfigError(f"metric {m!r} failed on every instance")
        arr = np.array(scored)
        summary[m] = {
            "mean": float(arr.mean()),
            "std": float(arr.std()),
            "n_scored": len(scored),
            "skipped": n - len(scored),
        }
    return MetricReport(per_instance=per_instance, summary=summary)


def _require(metrics, metric, **needed):
    if metric not in metrics:
        return
    missing = [name for name, value in needed.items() if value is None]
    if missing:
        raise OracleConfigError(
            f"metric {metric!r} requires {', '.join(missing)} to be configured"
        )
