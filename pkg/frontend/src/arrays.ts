/** Plain array containers exchanged with the synthesis engine. */

/** Interleaved RGB image, row-major, samples in [0, 1]. */
export interface FloatImage {
  width: number;
  height: number;
  /** length = width * height * 3 */
  data: Float32Array;
}

/** Row-major map of strictly positive relative depths. */
export interface DepthImage {
  width: number;
  height: number;
  /** length = width * height */
  data: Float32Array;
}

/** Row-major binary mask with one 0/1 byte per pixel. */
export interface BinaryMask {
  width: number;
  height: number;
  /** length = width * height */
  data: Uint8Array;
}

export function assertImageShape(img: FloatImage, what: string): void {
  if (img.width < 1 || img.height < 1) {
    throw new RangeError(`${what}: dimensions must be positive`);
  }
  if (img.data.length !== img.width * img.height * 3) {
    throw new RangeError(
      `${what}: expected ${img.width * img.height * 3} samples, got ${img.data.length}`,
    );
  }
}

export function assertDepthShape(depth: DepthImage, what: string): void {
  if (depth.data.length !== depth.width * depth.height) {
    throw new RangeError(
      `${what}: expected ${depth.width * depth.height} samples, got ${depth.data.length}`,
    );
  }
}

export function assertMaskShape(mask: BinaryMask, what: string): void {
  if (mask.data.length !== mask.width * mask.height) {
    throw new RangeError(
      `${what}: expected ${mask.width * mask.height} samples, got ${mask.data.length}`,
    );
  }
}
