/** Deterministic fixture arrays shared by the parity tests. */

import type { BinaryMask, DepthImage, FloatImage } from "../src/index.js";

export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 0x100000000;
  };
}

export function makeBackground(size: number, seed: number): FloatImage {
  const next = lcg(seed);
  const data = new Float32Array(size * size * 3);
  for (let i = 0; i < data.length; i++) {
    data[i] = 0.02 + 0.33 * next();
  }
  return { width: size, height: size, data };
}

/** Gaussian glow with a saturated white core, confined to the center. */
export function makeFlare(size: number): FloatImage {
  const data = new Float32Array(size * size * 3);
  const c = size / 2;
  const sigma = size / 6;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const r = Math.hypot(x + 0.5 - c, y + 0.5 - c);
      const rolloff = Math.min(1, Math.max(0, (0.46 * size - r) / (0.06 * size)));
      const glow = Math.exp(-(r * r) / (2 * sigma * sigma)) * rolloff;
      const i = (y * size + x) * 3;
      if (r <= 3) {
        data[i] = data[i + 1] = data[i + 2] = 1;
      } else {
        data[i] = glow;
        data[i + 1] = glow * 0.92;
        data[i + 2] = glow * 0.8;
      }
    }
  }
  return { width: size, height: size, data };
}

export function makeCoreMask(size: number): BinaryMask {
  const data = new Uint8Array(size * size);
  const c = size / 2;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      if (Math.hypot(x + 0.5 - c, y + 0.5 - c) <= 3) {
        data[y * size + x] = 1;
      }
    }
  }
  return { width: size, height: size, data };
}

export function makeDepth(size: number, left: number, right: number): DepthImage {
  const data = new Float32Array(size * size);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      data[y * size + x] = x < size / 2 ? left : right;
    }
  }
  return { width: size, height: size, data };
}
