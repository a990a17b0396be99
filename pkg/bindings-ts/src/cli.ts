/**
 * Subprocess bindings for the attrens command-line tool.
 *
 * Every operation spawns the CLI on a bundle manifest and parses the files it
 * writes; nothing reaches into the Python package's internals, so any attrens
 * build on PATH (or named by ATTRENS_BIN) works.
 */

import { spawn, spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { decodeNpy, NpyArray } from "./npy.js";

export class AttrensCliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(message);
  }
}
export class AttrensInvalidInput extends AttrensCliError {}
export class AttrensPreconditionFailed extends AttrensCliError {}
export class AttrensOracleFailure extends AttrensCliError {}

export interface RunOptions {
  /** Executable to spawn; falls back to $ATTRENS_BIN, then "attrens". */
  bin?: string;
  timeoutMs?: number;
}

export function attrensBin(opts?: RunOptions): string {
  return opts?.bin ?? process.env.ATTRENS_BIN ?? "attrens";
}

function raiseForExit(args: string[], code: number, stderr: string): void {
  if (code === 0) return;
  const message = `attrens ${args[0]} exited ${code}: ${stderr.trim()}`;
  if (code === 2) throw new AttrensInvalidInput(message, code, stderr);
  if (code === 3) throw new AttrensPreconditionFailed(message, code, stderr);
  if (code === 4) throw new AttrensOracleFailure(message, code, stderr);
  throw new AttrensCliError(message, code, stderr);
}

export function runAttrens(args: string[], opts?: RunOptions): string {
  const result = spawnSync(attrensBin(opts), args, {
    encoding: "utf8",
    timeout: opts?.timeoutMs ?? 300_000,
  });
  if (result.error) {
    throw new AttrensCliError(`failed to spawn ${attrensBin(opts)}: ${result.error.message}`, -1, "");
  }
  raiseForExit(args, result.status ?? -1, result.stderr);
  return result.stdout;
}

/**
 * Non-blocking runner. Required whenever the CLI must call back into this
 * process (CallbackOracleServer): the synchronous runner blocks the event
 * loop, which would deadlock the loopback oracle server.
 */
export function runAttrensAsync(args: string[], opts?: RunOptions): Promise<string> {
  return new Promise((resolve, reject) => {
    const child = spawn(attrensBin(opts), args, { timeout: opts?.timeoutMs ?? 300_000 });
    let stdout = "";
    let stderr = "";
    child.stdout.on("data", (d) => (stdout += d));
    child.stderr.on("data", (d) => (stderr += d));
    child.on("error", (err) =>
      reject(new AttrensCliError(`failed to spawn ${attrensBin(opts)}: ${err.message}`, -1, "")),
    );
    child.on("close", (code) => {
      try {
        raiseForExit(args, code ?? -1, stderr);
        resolve(stdout);
      } catch (err) {
        reject(err);
      }
    });
  });
}

export interface CommonOptions extends RunOptions {
  seed?: number;
  threads?: number;
}

function commonArgs(manifest: string, out: string, opts?: CommonOptions): string[] {
  const args = ["--manifest", manifest, "--out", out];
  if (opts?.seed !== undefined) args.push("--seed", String(opts.seed));
  if (opts?.threads !== undefined) args.push("--threads", String(opts.threads));
  return args;
}

export type Normalization = "standard" | "robust" | "second-moment" | "none";
export type Aggregator = "max" | "min" | "avg" | "max-abs";
export type Strategy = "norm" | "autoweighted" | "supervised";

export interface MethodStats {
  mean: number;
  std: number;
  median: number;
  iqr: number;
  per_channel_std: number[];
}

export interface NormalizeResult {
  stats: Record<string, MethodStats>;
  arrays: Record<string, NpyArray>;
  outDir: string;
}

export function normalize(
  manifest: string,
  out: string,
  opts?: CommonOptions & { normalization?: Normalization },
): NormalizeResult {
  const args = ["normalize", ...commonArgs(manifest, out, opts)];
  if (opts?.normalization) args.push("--normalization", opts.normalization);
  runAttrens(args, opts);
  const stats = JSON.parse(readFileSync(join(out, "stats.json"), "utf8")) as Record<string, MethodStats>;
  const arrays: Record<string, NpyArray> = {};
  for (const method of Object.keys(stats)) {
    arrays[method] = decodeNpy(readFileSync(join(out, `${method}.npy`)));
  }
  return { stats, arrays, outDir: out };
}

export interface EnsembleOptions extends CommonOptions {
  strategy?: Strategy;
  normalization?: Normalization;
  aggregator?: Aggregator;
  folds?: number;
  kernel?: "rbf" | "linear" | "polynomial";
  ridge?: number;
}

export interface EnsembleResult {
  tensors: NpyArray;
  provenance: Record<string, unknown>;
  outDir: string;
}

export function ensemble(manifest: string, out: string, opts?: EnsembleOptions): EnsembleResult {
  const args = ["ensemble", ...commonArgs(manifest, out, opts)];
  if (opts?.strategy) args.push("--strategy", opts.strategy);
  if (opts?.normalization) args.push("--normalization", opts.normalization);
  if (opts?.aggregator) args.push("--aggregator", opts.aggregator);
  if (opts?.folds !== undefined) args.push("--folds", String(opts.folds));
  if (opts?.kernel) args.push("--kernel", opts.kernel);
  if (opts?.ridge !== undefined) args.push("--ridge", String(opts.ridge));
  runAttrens(args, opts);
  return {
    tensors: decodeNpy(readFileSync(join(out, "ensemble.npy"))),
    provenance: JSON.parse(readFileSync(join(out, "provenance.json"), "utf8")),
    outDir: out,
  };
}

export type Metric = "fa" | "ra" | "ro" | "co" | "lo";

export interface MetricSummary {
  mean: number;
  std: number;
  n_scored: number;
  skipped: number;
}

export interface EvaluateResult {
  summary: Record<string, MetricSummary>;
  perInstance: Record<string, (number | null)[]>;
  outDir: string;
}

export interface EvaluateOptions extends CommonOptions {
  metrics?: Metric[];
  arrays?: string;
  steps?: number;
  samples?: number;
}

function evaluateArgs(manifest: string, out: string, opts?: EvaluateOptions): string[] {
  const args = ["evaluate", ...commonArgs(manifest, out, opts)];
  if (opts?.metrics) args.push("--metrics", opts.metrics.join(","));
  if (opts?.arrays) args.push("--arrays", opts.arrays);
  if (opts?.steps !== undefined) args.push("--steps", String(opts.steps));
  if (opts?.samples !== undefined) args.push("--samples", String(opts.samples));
  return args;
}

function readEvaluateResult(out: string): EvaluateResult {
  const report = JSON.parse(readFileSync(join(out, "report.json"), "utf8"));
  return { summary: report.summary, perInstance: report.per_instance, outDir: out };
}

export function evaluate(manifest: string, out: string, opts?: EvaluateOptions): EvaluateResult {
  runAttrens(evaluateArgs(manifest, out, opts), opts);
  return readEvaluateResult(out);
}

/** Async evaluate; use this with CallbackOracleServer-backed oracles. */
export async function evaluateAsync(
  manifest: string,
  out: string,
  opts?: EvaluateOptions,
): Promise<EvaluateResult> {
  await runAttrensAsync(evaluateArgs(manifest, out, opts), opts);
  return readEvaluateResult(out);
}

export interface BenchResult {
  timings: Record<string, { mean: number; std: number; times: number[] }>;
  ordering: string[];
  outDir: string;
}

export function bench(
  manifest: string,
  out: string,
  opts?: CommonOptions & { repetitions?: number; strategies?: Strategy[]; folds?: number },
): BenchResult {
  const args = ["bench", ...commonArgs(manifest, out, opts)];
  if (opts?.repetitions !== undefined) args.push("--repetitions", String(opts.repetitions));
  if (opts?.strategies) args.push("--strategies", opts.strategies.join(","));
  if (opts?.folds !== undefined) args.push("--folds", String(opts.folds));
  runAttrens(args, opts);
  const timing = JSON.parse(readFileSync(join(out, "timing.json"), "utf8"));
  return { timings: timing.timings, ordering: timing.ordering, outDir: out };
}
