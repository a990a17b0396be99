import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Bundle, NpyArray } from "../src/index.js";

/** Deterministic 32-bit PRNG (mulberry32). */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function gaussian(rng: () => number): number {
  // Box-Muller; rejects the 0 edge so log stays finite
  let u = 0;
  while (u === 0) u = rng();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * rng());
}

export function randomArray(rng: () => number, shape: number[], scale = 1): NpyArray {
  const n = shape.reduce((a, b) => a * b, 1);
  const data = new Float64Array(n);
  for (let i = 0; i < n; i++) data[i] = gaussian(rng) * scale;
  return { dtype: "<f8", shape, data };
}

export function randomMasks(rng: () => number, n: number, h: number, w: number): NpyArray {
  const data = new Float64Array(n * h * w);
  for (let i = 0; i < data.length; i++) data[i] = rng() > 0.5 ? 1 : 0;
  for (let i = 0; i < n; i++) data[i * h * w] = 1; // never fully empty
  return { dtype: "<f8", shape: [n, h, w], data };
}

export function makeBundle(seed: number, n = 6, methods = ["a", "b"], h = 4, w = 4): Bundle {
  const rng = makeRng(seed);
  const explanations: Record<string, NpyArray> = {};
  for (const m of methods) explanations[m] = randomArray(rng, [n, 1, h, w]);
  return { explanations, masks: randomMasks(rng, n, h, w) };
}

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}
