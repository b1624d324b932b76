/**
 * Typed bindings over the vistext command line.
 *
 * Thin pass-through only: every call spawns the Python CLI and parses
 * its outputs, so results are identical to direct CLI runs by
 * construction. Python interpreter resolution: the VISTEXT_PYTHON
 * environment variable, else "python3".
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Pinned to the core package version; checked against `vistext --version`. */
export const VERSION = "0.1.0";

export interface GridChoice {
  rows: number;
  cols: number;
  /** Combined resolution + aspect score of the selected grid. */
  score: number;
}

export interface MixtureOutputs {
  total: number;
  mixturePath: string;
  statsPath: string;
}

const pythonExecutable = (): string => process.env.VISTEXT_PYTHON ?? "python3";

const runCli = (args: string[]): string => {
  const result = spawnSync(pythonExecutable(), ["-m", "vistext", ...args], {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    throw result.error;
  }
  if (result.status !== 0) {
    const message = result.stderr.trim() || `vistext exited with code ${result.status}`;
    throw new Error(message);
  }
  return result.stdout;
};

const withTempDir = <T>(fn: (dir: string) => T): T => {
  const dir = mkdtempSync(join(tmpdir(), "vistext-bind-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
};

/** Version string reported by the underlying CLI. */
export const coreVersion = (): string => runCli(["--version"]).trim().split(/\s+/).pop() ?? "";

/**
 * Select the best tiling grid for an image shape.
 *
 * Mirrors the core's adaptive selection exactly: the CLI writes its
 * per-image selection record and this binding returns it untouched.
 */
export const selectGrid = (
  height: number,
  width: number,
  maxCells = 20,
  cellHeight = 224,
  cellWidth = 224,
): GridChoice =>
  withTempDir((dir) => {
    const dimsPath = join(dir, "dims.jsonl");
    writeFileSync(dimsPath, `${JSON.stringify({ height, width })}\n`, "utf-8");
    runCli([
      "plan",
      "--dims", dimsPath,
      "--out", dir,
      "--max-cells", String(maxCells),
      "--cell", `${cellHeight}x${cellWidth}`,
    ]);
    const line = readFileSync(join(dir, "grid_selections.jsonl"), "utf-8").trim();
    const selection = JSON.parse(line) as { rows: number; cols: number; total: number };
    return { rows: selection.rows, cols: selection.cols, score: selection.total };
  });

/**
 * Build a shuffled instruction mixture from a run config file.
 *
 * Byte-identical to `vistext build` for the same config and seed.
 */
export const buildMixture = (configPath: string, seed?: number): MixtureOutputs => {
  const args = ["build", "--config", configPath];
  if (seed !== undefined) {
    args.push("--seed", String(seed));
  }
  const summary = JSON.parse(runCli(args)) as {
    total: number;
    mixture: string;
    stats: string;
  };
  return { total: summary.total, mixturePath: summary.mixture, statsPath: summary.stats };
};

/**
 * Score a prediction file against a gold file; returns the metric value.
 *
 * Metrics: anls, relaxed_accuracy, accuracy, kv_f1, bleu1..bleu4, bleu.
 */
export const evalMetric = (metric: string, predPath: string, goldPath: string): number => {
  const report = JSON.parse(
    runCli(["eval", "--metric", metric, "--pred", predPath, "--gold", goldPath]),
  ) as { metric: string; value: number; count: number };
  return report.value;
};
