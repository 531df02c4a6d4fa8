"""Seeded random affine transformations of flare templates.

Every random draw flows through a SeededRng, a (master_seed, stream_index)
pair that produces the same sequence on every platform. Stream indices are
derived by hashing purpose tags and sample indices, so results never depend
on worker scheduling.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .imgcore import Image, RegionMask

_U64 = (1 << 64) - 1


def derive_stream_index(*parts) -> int:
    """Stable 64-bit stream index from a tuple of tags/indices."""
    payload = b"\x1f".join(str(p).encode("utf-8") for p in parts)
    digest = hashlib.sha256(b"flareforge:" + payload).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SeededRng:
    """Deterministic RNG stream addressed by (master_seed, stream_index)."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([self.master_seed & _U64, self.stream_index & _U64])
        return np.random.default_rng(seq)


@dataclass(frozen=True)
class AffineParams:
    """One sampled affine transform: rotate/scale/shear about the center,
    then translate (units: radians, dimensionless scale, output pixels)."""

    rotation: float = 0.0
    scale: float = 1.0
    translate_x: float = 0.0
    translate_y: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0

    def __post_init__(self):
        values = (self.rotation, self.scale, self.translate_x,
                  self.translate_y, self.shear_x, self.shear_y)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("affine parameters must be finite")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation,
            "scale": self.scale,
            "translate_x": self.translate_x,
            "translate_y": self.translate_y,
            "shear_x": self.shear_x,
            "shear_y": self.shear_y,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AffineParams":
        return cls(**{k: float(d[k]) for k in (
            "rotation", "scale", "translate_x", "translate_y", "shear_x", "shear_y")})


@dataclass(frozen=True)
class AffineRanges:
    """Uniform sampling ranges, already in final units (radians / pixels)."""

    rotation: tuple[float, float] = (0.0, 2.0 * math.pi)
    scale: tuple[float, float] = (0.8, 1.5)
    translate_x: tuple[float, float] = (0.0, 0.0)
    translate_y: tuple[float, float] = (0.0, 0.0)
    shear: tuple[float, float] = (-math.radians(10.0), math.radians(10.0))

    def validate(self) -> None:
        for name in ("rotation", "scale", "translate_x", "translate_y", "shear"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"affine range {name} must be finite")
            if lo > hi:
                raise ConfigError(f"affine range {name} is inverted: [{lo}, {hi}]")
        if self.scale[0] <= 0:
            raise ConfigError(f"scale range must be positive, got {self.scale}")


IDENTITY_RANGES = AffineRanges(
    rotation=(0.0, 0.0), scale=(1.0, 1.0),
    translate_x=(0.0, 0.0), translate_y=(0.0, 0.0), shear=(0.0, 0.0),
)


def sample_affine(rng: SeededRng, ranges: AffineRanges) -> AffineParams:
    """Draw affine parameters uniformly from ``ranges``.

    Always consumes exactly 6 draws in a fixed order (rotation, scale,
    translate_x, translate_y, shear_x, shear_y), so degenerate ranges do
    not shift later streams.
    """
    ranges.validate()
    g = rng.generator()
    rotation = g.uniform(*ranges.rotation)
    scale = g.uniform(*ranges.scale)
    tx = g.uniform(*ranges.translate_x)
    ty = g.uniform(*ranges.translate_y)
    shx = g.uniform(*ranges.shear)
    shy = g.uniform(*ranges.shear)
    return AffineParams(rotation=float(rotation), scale=float(scale),
                        translate_x=float(tx), translate_y=float(ty),
                        shear_x=float(shx), shear_y=float(shy))


def _inverse_matrix(p: AffineParams) -> np.ndarray:
    """2x2 inverse of the rotate/shear/scale block."""
    c, s = math.cos(p.rotation), math.sin(p.rotation)
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    shear = np.array([[1.0, math.tan(p.shear_x)],
                      [math.tan(p.shear_y), 1.0]], dtype=np.float64)
    fwd = rot @ shear * p.scale
    det = fwd[0, 0] * fwd[1, 1] - fwd[0, 1] * fwd[1, 0]
    if abs(det) < 1e-12:
        raise ValueError("affine transform is singular (shear too extreme)")
    inv = np.array([[fwd[1, 1], -fwd[0, 1]], [-fwd[1, 0], fwd[0, 0]]],
                   dtype=np.float64) / det
    return inv


def _source_coords(p: AffineParams, src_w: int, src_h: int,
                   out_w: int, out_h: int) -> tuple[np.ndarray, np.ndarray]:
    """Map every output pixel center back to source array coordinates."""
    inv = _inverse_matrix(p)
    xs = np.arange(out_w, dtype=np.float64) + 0.5
    ys = np.arange(out_h, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    # undo translation and output centering, invert the linear block,
    # then re-center on the source
    dx = gx - out_w / 2.0 - p.translate_x
    dy = gy - out_h / 2.0 - p.translate_y
    sx = inv[0, 0] * dx + inv[0, 1] * dy + src_w / 2.0
    sy = inv[1, 0] * dx + inv[1, 1] * dy + src_h / 2.0
    # pixel center (i + 0.5) -> array index space
    return sx - 0.5, sy - 0.5


def _warp_bilinear(data: np.ndarray, p: AffineParams, out_w: int, out_h: int) -> np.ndarray:
    src_h, src_w = data.shape[:2]
    sx, sy = _source_coords(p, src_w, src_h, out_w, out_h)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    flat = data.reshape(-1, data.shape[2]).astype(np.float64)
    out = np.zeros((out_h, out_w, data.shape[2]), dtype=np.float64)
    for dy_ in (0, 1):
        for dx_ in (0, 1):
            xi = x0 + dx_
            yi = y0 + dy_
            valid = (xi >= 0) & (xi < src_w) & (yi >= 0) & (yi < src_h)
            wx = fx if dx_ == 1 else 1.0 - fx
            wy = fy if dy_ == 1 else 1.0 - fy
            weight = np.where(valid, wx * wy, 0.0)
            idx = np.where(valid, yi * src_w + xi, 0)
            out += weight[:, :, None] * flat[idx]
    return out


def _warp_nearest(data: np.ndarray, p: AffineParams, out_w: int, out_h: int) -> np.ndarray:
    src_h, src_w = data.shape[:2]
    sx, sy = _source_coords(p, src_w, src_h, out_w, out_h)
    xi = np.floor(sx + 0.5).astype(np.int64)
    yi = np.floor(sy + 0.5).astype(np.int64)
    valid = (xi >= 0) & (xi < src_w) & (yi >= 0) & (yi < src_h)
    idx = np.where(valid, yi * src_w + xi, 0)
    flat = data.reshape(-1, data.shape[2])
    out = flat[idx]
    out[~valid] = 0
    return out


def apply_affine(img: Image, p: AffineParams, out_w: int, out_h: int) -> Image:
    """Resample ``img`` under ``p`` into an out_w x out_h canvas.

    Inverse-mapped bilinear sampling about the image centers; anything
    falling outside the source is zero (black), which is additive-neutral
    for flares living on black backgrounds.
    """
    if out_w < 1 or out_h < 1:
        raise DimensionError(f"output size must be positive, got {out_w}x{out_h}")
    warped = _warp_bilinear(img.data, p, out_w, out_h)
    return Image(warped.astype(np.float32), space=img.space, headroom=img.headroom)


def apply_affine_mask(mask: RegionMask, p: AffineParams, out_w: int, out_h: int) -> RegionMask:
    """Resample a binary mask under ``p`` with nearest-neighbor sampling."""
    if out_w < 1 or out_h < 1:
        raise DimensionError(f"output size must be positive, got {out_w}x{out_h}")
    warped = _warp_nearest(mask.data[:, :, None], p, out_w, out_h)
    return RegionMask(warped[:, :, 0])
