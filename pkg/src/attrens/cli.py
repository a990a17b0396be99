"""Command-line entry point: normalize, ensemble, evaluate and bench workflows.

Exit codes: 0 success, 2 input/validation problems, 3 strategy precondition
failures, 4 oracle failures. Worker threads only parallelize per-instance or
per-fold work and always assemble results in index order, so outputs are
bit-identical across thread counts.
"""

import functools
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .autoweighted import PerturbationEvidence, autoweighted_ensemble
from .core import compute_stats
from .ensemble import AGGREGATORS, norm_ensemble_xai
from .errors import (
    AttrensError,
    MissingEvidence,
    MissingMasks,
    OracleConfigError,
    OracleFailure,
    StrategyError,
    ValidationError,
)
from .krr import DEFAULT_BYTE_BUDGET, Kernel
from .manifest import load_bundle
from .metrics import ALL_METRICS, evaluate_all
from .normalization import KINDS, normalize
from .npyio import write_npy
from .oracles import BuiltinLinear, ExternalCommandOracle
from .supervised import supervised_xai


def resolve_threads(threads):
    """CLI flag, overridden by ATTRENS_THREADS when set."""
    env = os.environ.get("ATTRENS_THREADS")
    if env:
        return max(1, int(env))
    return max(1, threads)


def make_parallel_map(threads):
    """An order-preserving map, threaded when threads > 1."""
    if threads <= 1:
        return lambda fn, items: list(map(fn, items))

    def pmap(fn, items):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))

    return pmap


def _write_provenance(out_dir, subcommand, options, captured_warnings):
    doc = {
        "tool": "attrens",
        "version": __version__,
        "subcommand": subcommand,
        "options": options,
        "warnings": [str(w.message) for w in captured_warnings],
    }
    (Path(out_dir) / "provenance.json").write_text(json.dumps(doc, indent=2) + "\n")


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except OracleFailure as exc:
            click.echo(f"oracle failure: {exc}", err=True)
            sys.exit(4)
        except (MissingMasks, MissingEvidence, StrategyError) as exc:
            click.echo(f"strategy precondition failed: {exc}", err=True)
            sys.exit(3)
        except (ValidationError, OracleConfigError, ValueError) as exc:
            click.echo(f"invalid input: {exc}", err=True)
            sys.exit(2)
        except AttrensError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Ensemble precomputed attribution maps and score explanation quality."""


_common = [
    click.option("--manifest", "manifest_path", required=True, type=click.Path(), help="Bundle manifest JSON."),
    click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory."),
    click.option("--seed", default=0, show_default=True, help="RNG seed."),
    click.option("--threads", default=1, show_default=True, help="Worker threads (env ATTRENS_THREADS overrides)."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


def _kernel_options(fn):
    fn = click.option("--kernel", default="rbf", type=click.Choice(["rbf", "linear", "polynomial"]), show_default=True)(fn)
    fn = click.option("--gamma", default=None, type=float, help="RBF gamma (default 1/d).")(fn)
    fn = click.option("--degree", default=3, show_default=True, type=int)(fn)
    fn = click.option("--coef0", default=0.0, show_default=True, type=float)(fn)
    fn = click.option("--ridge", default=1.0, show_default=True, type=float)(fn)
    fn = click.option("--byte-budget", default=DEFAULT_BYTE_BUDGET, show_default=True, type=int,
                      help="Fail fast if the Gram matrix would exceed this many bytes.")(fn)
    return fn


def _make_kernel(kernel, gamma, degree, coef0):
    return Kernel(kind=kernel, gamma=gamma, degree=degree, coef0=coef0)


@main.command("normalize")
@common_options
@click.option("--normalization", default="standard", type=click.Choice(KINDS), show_default=True)
@_exit_codes
def cmd_normalize(manifest_path, out_dir, seed, threads, normalization):
    """Write per-method normalized arrays plus the statistics actually used."""
    bundle = load_bundle(manifest_path)
    expl = bundle.explanations
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        normalized = normalize(expl, normalization)
        stats = {}
        for m in expl.methods:
            s = compute_stats(expl, m)
            stats[m] = {
                "mean": s.mean,
                "std": s.std,
                "median": s.median,
                "iqr": s.iqr,
                "per_channel_std": s.per_channel_std.tolist(),
            }
            write_npy(np.asarray(normalized.data[m]), out / f"{m}.npy")
    (out / "stats.json").write_text(json.dumps(stats, indent=2) + "\n")
    _write_provenance(out, "normalize", {
        "manifest": str(manifest_path), "normalization": normalization, "seed": seed,
    }, caught)
    click.echo(f"wrote {len(expl.methods)} normalized stacks to {out}")


@main.command("ensemble")
@common_options
@click.option("--strategy", default="norm", type=click.Choice(["norm", "autoweighted", "supervised"]), show_default=True)
@click.option("--normalization", default="standard", type=click.Choice(KINDS), show_default=True)
@click.option("--aggregator", default="avg", type=click.Choice(AGGREGATORS), show_default=True)
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--holdout", default=None, type=float, help="Holdout fraction instead of k-fold.")
@click.option("--radial-profile", is_flag=True, help="Emit the center-bias radial diagnostic (supervised).")
@_kernel_options
@_exit_codes
def cmd_ensemble(manifest_path, out_dir, seed, threads, strategy, normalization,
                 aggregator, folds, holdout, radial_profile, kernel, gamma, degree,
                 coef0, ridge, byte_budget):
    """Ensemble the bundle's explanations and write the result with provenance."""
    bundle = load_bundle(manifest_path)
    expl = bundle.explanations
    pmap = make_parallel_map(resolve_threads(threads))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if strategy == "norm":
            result = norm_ensemble_xai(expl, normalization, aggregator)
        elif strategy == "autoweighted":
            if bundle.evidence is None:
                raise MissingEvidence(
                    "autoweighted needs perturbed/alt_models evidence in the manifest"
                )
            result = autoweighted_ensemble(expl, bundle.evidence)
        else:
            result = supervised_xai(
                expl, bundle.masks, kernel=_make_kernel(kernel, gamma, degree, coef0),
                ridge=ridge, folds=holdout if holdout is not None else folds,
                byte_budget=byte_budget, radial_profile=radial_profile,
                parallel_map=pmap,
            )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_npy(np.asarray(result.tensors, dtype=np.float64), out / "ensemble.npy")
    options = {
        "manifest": str(manifest_path), "strategy": strategy, "seed": seed,
        "normalization": result.normalization, "aggregator": result.aggregator,
        "weights": result.weights, "diagnostics": result.diagnostics,
        "kernel": kernel, "ridge": ridge, "folds": folds, "holdout": holdout,
    }
    _write_provenance(out, "ensemble", options, caught)
    click.echo(f"wrote ensemble of {expl.n_instances} instances to {out}")


def _build_oracles(bundle, manifest_path):
    """Model/explainer oracles from the manifest oracle block (None when absent)."""
    cfg = bundle.oracle
    if cfg is None:
        return None, None
    base = Path(manifest_path).parent
    if cfg.builtin_weights is not None:
        from .npyio import read_npy

        linear = BuiltinLinear(read_npy(base / cfg.builtin_weights))
        return linear, linear
    model = explainer = None
    if cfg.model_command:
        model = ExternalCommandOracle(
            cfg.model_command, role="model", timeout=cfg.timeout, num_classes=cfg.num_classes
        )
    if cfg.explainer_command:
        explainer = ExternalCommandOracle(
            cfg.explainer_command, role="explainer", timeout=cfg.timeout
        )
    return model, explainer


@main.command("evaluate")
@common_options
@click.option("--metrics", default="co,lo", show_default=True,
              help=f"Comma-separated subset of {','.join(ALL_METRICS)}.")
@click.option("--arrays", default=None, type=click.Path(),
              help="NPY stack (N,C,H,W) to score, e.g. an ensemble output; "
                   "defaults to a method from the manifest.")
@click.option("--method", default=None, help="Manifest method to score when --arrays is absent.")
@click.option("--steps", default=8, show_default=True, type=int, help="Pixel-flipping batches.")
@click.option("--samples", default=16, show_default=True, type=int, help="Lipschitz perturbations.")
@click.option("--radius", default=None, type=float, help="Lipschitz ball radius.")
@click.option("--baseline", default=0.0, show_default=True, type=float, help="Pixel-flipping baseline value.")
@_exit_codes
def cmd_evaluate(manifest_path, out_dir, seed, threads, metrics, arrays, method,
                 steps, samples, radius, baseline):
    """Score attribution maps on the selected metric categories."""
    bundle = load_bundle(manifest_path)
    expl = bundle.explanations
    selection = tuple(m.strip() for m in metrics.split(",") if m.strip())

    if arrays is not None:
        from .npyio import read_npy

        tensors = read_npy(arrays)
    else:
        name = method or expl.methods[0]
        if name not in expl.data:
            raise ValidationError(f"method {name!r} not in manifest")
        tensors = np.asarray(expl.data[name])

    model, explainer = _build_oracles(bundle, manifest_path)
    pmap = make_parallel_map(resolve_threads(threads))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate_all(
            tensors, masks=bundle.masks, inputs=bundle.inputs, labels=bundle.labels,
            model=model, explainer=explainer, metrics=selection, seed=seed,
            steps=steps, baseline=baseline, samples=samples, radius=radius,
            parallel_map=pmap,
        )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    _write_report_csv(out / "report.csv", report, expl.instance_ids)
    _write_provenance(out, "evaluate", {
        "manifest": str(manifest_path), "metrics": list(selection), "seed": seed,
        "arrays": arrays, "method": method, "steps": steps, "samples": samples,
        "radius": radius, "baseline": baseline,
    }, caught)
    for m in selection:
        s = report.summary[m]
        click.echo(f"{m}: {s['mean']:.4f} +- {s['std']:.4f} ({s['n_scored']} scored)")


def _write_report_csv(path, report, instance_ids):
    metrics = list(report.per_instance)
    lines = ["instance_id," + ",".join(metrics)]
    for i, iid in enumerate(instance_ids):
        cells = [
            "" if report.per_instance[m][i] is None else f"{report.per_instance[m][i]:.10g}"
            for m in metrics
        ]
        lines.append(f"{iid}," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def synthesize_evidence(expl, inputs, explainer, p, seed, target=0, noise_sigma=0.1):
    """Build perturbation evidence by re-running the explainer on noisy inputs.

    One explainer call per (method, perturbation) to model the real cost of
    evidence recomputation, plus two calls per method standing in for the
    alternate models. With a single explainer the synthesized evidence is
    identical across methods, so the resulting weights are uniform.
    """
    rng = np.random.default_rng(seed)
    inputs = np.asarray(inputs, dtype=np.float64)
    scale = noise_sigma * (inputs.std() or 1.0)
    perturbed = {m: [] for m in expl.methods}
    distances = []
    for _ in range(p):
        noise = rng.standard_normal(inputs.shape) * scale
        xp = inputs + noise
        distances.append(np.linalg.norm(noise.reshape(noise.shape[0], -1), axis=1))
        for m in expl.methods:
            perturbed[m].append(explainer.explain(xp, target))
    alt_models = {m: np.stack([explainer.explain(inputs, target) for _ in range(2)])
                  for m in expl.methods}
    return PerturbationEvidence(
        baseline={m: np.asarray(expl.data[m]) for m in expl.methods},
        perturbed={m: np.stack(v) for m, v in perturbed.items()},
        input_distances=np.stack(distances),
        alt_models=alt_models,
    )


@main.command("bench")
@common_options
@click.option("--repetitions", default=5, show_default=True, type=int)
@click.option("--strategies", default="norm,supervised,autoweighted", show_default=True)
@click.option("--normalization", default="standard", type=click.Choice(KINDS), show_default=True)
@click.option("--aggregator", default="avg", type=click.Choice(AGGREGATORS), show_default=True)
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--recompute-evidence", default=0, show_default=True, type=int,
              help="For autoweighted: recompute evidence with this many perturbations "
                   "through the manifest's explainer oracle (0 = use manifest evidence).")
@_kernel_options
@_exit_codes
def cmd_bench(manifest_path, out_dir, seed, threads, repetitions, strategies,
              normalization, aggregator, folds, recompute_evidence, kernel, gamma,
              degree, coef0, ridge, byte_budget):
    """Time each ensembling strategy on the same bundle and report the ordering."""
    bundle = load_bundle(manifest_path)
    expl = bundle.explanations
    pmap = make_parallel_map(resolve_threads(threads))
    kern = _make_kernel(kernel, gamma, degree, coef0)
    selection = [s.strip() for s in strategies.split(",") if s.strip()]

    def run(strategy):
        if strategy == "norm":
            norm_ensemble_xai(expl, normalization, aggregator)
        elif strategy == "supervised":
            supervised_xai(expl, bundle.masks, kernel=kern, ridge=ridge,
                           folds=folds, byte_budget=byte_budget, parallel_map=pmap)
        elif strategy == "autoweighted":
            if recompute_evidence > 0:
                _, explainer = _build_oracles(bundle, manifest_path)
                if explainer is None:
                    raise MissingEvidence("evidence recomputation needs an explainer oracle")
                if bundle.inputs is None:
                    raise MissingEvidence("evidence recomputation needs inputs in the manifest")
                evidence = synthesize_evidence(
                    expl, bundle.inputs, explainer, recompute_evidence, seed
                )
            elif bundle.evidence is not None:
                evidence = bundle.evidence
            else:
                raise MissingEvidence("no evidence in manifest and recomputation disabled")
            autoweighted_ensemble(expl, evidence)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")

    timings = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for strategy in selection:
            times = []
            for _ in range(repetitions):
                start = time.perf_counter()
                run(strategy)
                times.append(time.perf_counter() - start)
            arr = np.array(times)
            timings[strategy] = {"mean": float(arr.mean()), "std": float(arr.std()),
                                 "times": times}

    ordering = sorted(selection, key=lambda s: timings[s]["mean"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timing.json").write_text(
        json.dumps({"timings": timings, "ordering": ordering}, indent=2) + "\n"
    )
    _write_provenance(out, "bench", {
        "manifest": str(manifest_path), "repetitions": repetitions,
        "strategies": selection, "recompute_evidence": recompute_evidence,
        "seed": seed,
    }, caught)
    for s in ordering:
        click.echo(f"{s}: {timings[s]['mean']:.4f}s +- {timings[s]['std']:.4f}s")


if __name__ == "__main__":
    main()
