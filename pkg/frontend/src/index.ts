/**
 * Array-in/array-out client for the flareforge synthesis engine.
 *
 * Training dataloaders hand over plain typed arrays; the client stages them
 * as the engine's documented file formats (PNG / PFM / JSON config) in a
 * scratch directory, drives one CLI invocation, and reads the outputs back.
 * Because the engine itself is deterministic in (config, inputs, index),
 * results are bit-identical to a regular dataset run over the same files.
 */

import { mkdtempSync, mkdirSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { BinaryMask, DepthImage, FloatImage } from "./arrays.js";
import { writeDepthPfm } from "./pfm.js";
import { readImagePng, readMaskPng, writeImagePng, writeMaskPng } from "./png.js";
import { EngineError, resolveCommand, runEngine } from "./runner.js";

export type { BinaryMask, DepthImage, FloatImage } from "./arrays.js";
export { EngineError } from "./runner.js";
export { quantize, readImagePng, readMaskPng, writeImagePng, writeMaskPng } from "./png.js";
export { writeDepthPfm } from "./pfm.js";

export const CLIENT_VERSION = "0.1.0";

/** Mirror of the engine's synthesis config (camelCase keys). */
export interface SynthesisOptions {
  masterSeed?: number;
  fovMode?: "fixed" | "random_choice";
  fovDegrees?: number | number[];
  flareCount?: [number, number];
  /** null disables gamma handling (requires composeSpace "encoded") */
  gammaRange?: [number, number] | null;
  composeSpace?: "linear" | "encoded";
  gtMode?: "auto" | "background_only" | "background_plus_light_source";
  tauLs?: number;
  /** null means uncapped */
  maxScale?: number | null;
  affine?: {
    rotationDeg?: [number, number];
    scale?: [number, number];
    translateFrac?: [number, number];
    shearDeg?: [number, number];
  };
}

export type ThresholdStrategy =
  | { kind: "fixed"; tau: number }
  | { kind: "affine_of_mean"; w: number; b: number }
  | { kind: "percentile"; p: number };

export interface SynthesizedPair {
  input: FloatImage;
  gt: FloatImage;
  mask: BinaryMask;
  /** full provenance record as emitted by the engine */
  record: Record<string, unknown>;
}

export interface MaskOutcome {
  mask: BinaryMask;
  tau: number;
  coverage: number;
}

interface EngineConfig {
  [key: string]: unknown;
}

function engineConfig(options: SynthesisOptions): EngineConfig {
  const cfg: EngineConfig = {};
  if (options.masterSeed !== undefined) cfg.master_seed = options.masterSeed;
  if (options.fovMode !== undefined) cfg.fov_mode = options.fovMode;
  if (options.fovDegrees !== undefined) cfg.fov_degrees = options.fovDegrees;
  if (options.flareCount !== undefined) cfg.flare_count = options.flareCount;
  if (options.gammaRange !== undefined) cfg.gamma_range = options.gammaRange;
  if (options.composeSpace !== undefined) cfg.compose_space = options.composeSpace;
  if (options.gtMode !== undefined) cfg.gt_mode = options.gtMode;
  if (options.tauLs !== undefined) cfg.tau_ls = options.tauLs;
  if (options.maxScale !== undefined) cfg.max_scale = options.maxScale;
  if (options.affine !== undefined) {
    const affine: EngineConfig = {};
    if (options.affine.rotationDeg) affine.rotation_deg = options.affine.rotationDeg;
    if (options.affine.scale) affine.scale = options.affine.scale;
    if (options.affine.translateFrac) affine.translate_frac = options.affine.translateFrac;
    if (options.affine.shearDeg) affine.shear_deg = options.affine.shearDeg;
    cfg.affine = affine;
  }
  return cfg;
}

export class FlareforgeClient {
  private readonly command: string[];

  constructor(options: { command?: string[] } = {}) {
    this.command = resolveCommand(options.command);
  }

  /** Engine version string, e.g. "flareforge 0.1.0". */
  engineVersion(): string {
    return runEngine(this.command, ["--version"]).trim();
  }

  /**
   * Synthesize one training pair from in-memory arrays.
   *
   * The pair index selects the engine's deterministic sampling stream, so a
   * dataloader can shard indices across workers and still reproduce the
   * exact dataset a file-based run would produce.
   */
  synthesizePair(
    options: SynthesisOptions,
    background: FloatImage,
    depth: DepthImage,
    flare: FloatImage,
    lightSourceMask: BinaryMask | undefined,
    index: number,
  ): SynthesizedPair {
    if (!Number.isInteger(index) || index < 0) {
      throw new RangeError(`pair index must be a non-negative integer, got ${index}`);
    }
    if (background.width !== depth.width || background.height !== depth.height) {
      throw new RangeError("background and depth dimensions must match");
    }
    const scratch = mkdtempSync(join(tmpdir(), "flareforge-"));
    try {
      const bgDir = join(scratch, "backgrounds");
      const depthDir = join(scratch, "depths");
      const flareDir = join(scratch, "flares");
      for (const dir of [bgDir, depthDir, flareDir]) {
        mkdirSync(dir);
      }
      writeImagePng(background, join(bgDir, "bg.png"));
      writeDepthPfm(depth, join(depthDir, "bg.pfm"));
      writeImagePng(flare, join(flareDir, "flare.png"));
      if (lightSourceMask) {
        writeMaskPng(lightSourceMask, join(flareDir, "flare_ls.png"));
      }
      const configPath = join(scratch, "config.json");
      writeFileSync(configPath, JSON.stringify(engineConfig(options)));
      const outDir = join(scratch, "out");
      runEngine(this.command, [
        "synth",
        "--config", configPath,
        "--backgrounds", bgDir,
        "--depths", depthDir,
        "--flares", flareDir,
        "--out", outDir,
        "--count", "1",
        "--first-index", String(index),
      ]);
      const name = String(index).padStart(6, "0");
      const record = JSON.parse(
        readFileSync(join(outDir, "records", `${name}.json`), "utf8"),
      ) as Record<string, unknown>;
      return {
        input: readImagePng(join(outDir, "input", `${name}.png`)),
        gt: readImagePng(join(outDir, "gt", `${name}.png`)),
        mask: readMaskPng(join(outDir, "mask", `${name}.png`)),
        record,
      };
    } finally {
      rmSync(scratch, { recursive: true, force: true });
    }
  }

  /** Compute an adaptive-focus mask for one image. */
  generateMask(image: FloatImage, strategy: ThresholdStrategy): MaskOutcome {
    const scratch = mkdtempSync(join(tmpdir(), "flareforge-"));
    try {
      const inputPath = join(scratch, "input.png");
      const maskPath = join(scratch, "mask.png");
      writeImagePng(image, inputPath);
      const args = ["mask", "--input", inputPath, "--out", maskPath,
        "--strategy", strategy.kind];
      if (strategy.kind === "fixed") {
        args.push("--tau", String(strategy.tau));
      } else if (strategy.kind === "affine_of_mean") {
        args.push("--w", String(strategy.w), "--b", String(strategy.b));
      } else {
        args.push("--p", String(strategy.p));
      }
      const stdout = runEngine(this.command, args);
      const payload = JSON.parse(stdout) as { tau: number; coverage: number };
      if (typeof payload.tau !== "number") {
        throw new EngineError("ProtocolError", `unexpected mask output: ${stdout}`);
      }
      return { mask: readMaskPng(maskPath), tau: payload.tau, coverage: payload.coverage };
    } finally {
      rmSync(scratch, { recursive: true, force: true });
    }
  }
}
