/** Lossless PNG bridging between float arrays and the engine's 8-bit files. */

import { readFileSync, writeFileSync } from "node:fs";
import { PNG } from "pngjs";

import type { BinaryMask, FloatImage } from "./arrays.js";
import { assertImageShape, assertMaskShape } from "./arrays.js";

/** Round-half-up quantization, matching the engine's 8-bit PNG writer. */
export function quantize(value: number): number {
  const level = Math.floor(value * 255.0 + 0.5);
  return Math.min(255, Math.max(0, level));
}

export function writeImagePng(img: FloatImage, path: string): void {
  assertImageShape(img, "image");
  const png = new PNG({ width: img.width, height: img.height, colorType: 6 });
  const n = img.width * img.height;
  for (let i = 0; i < n; i++) {
    png.data[i * 4] = quantize(img.data[i * 3]);
    png.data[i * 4 + 1] = quantize(img.data[i * 3 + 1]);
    png.data[i * 4 + 2] = quantize(img.data[i * 3 + 2]);
    png.data[i * 4 + 3] = 255;
  }
  writeFileSync(path, PNG.sync.write(png, { colorType: 2 }));
}

export function readImagePng(path: string): FloatImage {
  const png = PNG.sync.read(readFileSync(path));
  const n = png.width * png.height;
  const data = new Float32Array(n * 3);
  for (let i = 0; i < n; i++) {
    data[i * 3] = png.data[i * 4] / 255;
    data[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    data[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { width: png.width, height: png.height, data };
}

export function writeMaskPng(mask: BinaryMask, path: string): void {
  assertMaskShape(mask, "mask");
  const png = new PNG({ width: mask.width, height: mask.height, colorType: 6 });
  const n = mask.width * mask.height;
  for (let i = 0; i < n; i++) {
    const v = mask.data[i] ? 255 : 0;
    png.data[i * 4] = v;
    png.data[i * 4 + 1] = v;
    png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  writeFileSync(path, PNG.sync.write(png, { colorType: 0 }));
}

export function readMaskPng(path: string): BinaryMask {
  const png = PNG.sync.read(readFileSync(path));
  const n = png.width * png.height;
  const data = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = png.data[i * 4] >= 128 ? 1 : 0;
  }
  return { width: png.width, height: png.height, data };
}
