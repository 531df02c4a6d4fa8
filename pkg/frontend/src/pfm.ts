/** Grayscale PFM writer (the engine's depth-map input format). */

import { writeFileSync } from "node:fs";

import type { DepthImage } from "./arrays.js";
import { assertDepthShape } from "./arrays.js";

/** Little-endian "Pf" file; PFM stores rows bottom-to-top. */
export function writeDepthPfm(depth: DepthImage, path: string): void {
  assertDepthShape(depth, "depth");
  const header = Buffer.from(`Pf\n${depth.width} ${depth.height}\n-1.0\n`, "ascii");
  const payload = Buffer.alloc(depth.width * depth.height * 4);
  for (let row = 0; row < depth.height; row++) {
    const srcRow = depth.height - 1 - row;
    for (let col = 0; col < depth.width; col++) {
      payload.writeFloatLE(
        depth.data[srcRow * depth.width + col],
        (row * depth.width + col) * 4,
      );
    }
  }
  writeFileSync(path, Buffer.concat([header, payload]));
}
