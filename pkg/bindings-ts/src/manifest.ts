/**
 * Bundle manifest construction (schema version 1).
 *
 * A bundle is a directory holding NPY arrays plus a manifest.json that names
 * them; it is the sole data interchange with the attrens CLI.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { encodeNpy, NpyArray } from "./npy.js";

export interface OracleBlock {
  builtin_weights?: string;
  model_command?: string;
  explainer_command?: string;
  num_classes?: number;
  timeout?: number;
}

export interface Bundle {
  /** (N, C, H, W) stack per explanation method. */
  explanations: Record<string, NpyArray>;
  instanceIds?: string[];
  /** (N, H, W) binary localization masks. */
  masks?: NpyArray;
  /** (N, C, H, W) model inputs. */
  inputs?: NpyArray;
  /** (N,) class labels. */
  labels?: NpyArray;
  oracle?: OracleBlock;
}

function stackShape(bundle: Bundle): [number, number, number, number] {
  const first = Object.values(bundle.explanations)[0];
  if (!first || first.shape.length !== 4) {
    throw new Error("bundle needs at least one (N, C, H, W) explanation stack");
  }
  return first.shape as [number, number, number, number];
}

/**
 * Serialize a bundle into `dir` and return the manifest path.
 */
export function writeBundle(dir: string, bundle: Bundle): string {
  mkdirSync(dir, { recursive: true });
  const [n, c, h, w] = stackShape(bundle);
  const ids = bundle.instanceIds ?? Array.from({ length: n }, (_, i) => `i${i}`);
  const doc: Record<string, unknown> = {
    schema_version: 1,
    shape: { n, c, h, w },
    instance_ids: ids,
    explanations: {} as Record<string, string>,
  };
  const explanations = doc.explanations as Record<string, string>;
  for (const [method, arr] of Object.entries(bundle.explanations)) {
    const fname = `expl_${method}.npy`;
    writeFileSync(join(dir, fname), encodeNpy(arr));
    explanations[method] = fname;
  }
  const optional: [string, NpyArray | undefined][] = [
    ["masks", bundle.masks],
    ["inputs", bundle.inputs],
    ["labels", bundle.labels],
  ];
  for (const [key, arr] of optional) {
    if (arr !== undefined) {
      const fname = `${key}.npy`;
      writeFileSync(join(dir, fname), encodeNpy(arr));
      doc[key] = fname;
    }
  }
  if (bundle.oracle !== undefined) doc.oracle = bundle.oracle;
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(doc, null, 2) + "\n");
  return manifestPath;
}
