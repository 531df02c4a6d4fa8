"""Adaptive focus masking: luminance thresholds, binary masks, masked images.

The deterministic counterpart of the training-side adaptive focus module:
a threshold is derived from the luma plane, every pixel at or above it is
kept, and the mask multiplies the image so restoration models only see the
bright (flare-affected) regions.

The threshold can be fixed, a nearest-rank percentile of the luma values,
or sigmoid(w * mean(luma) + b) - the resolution-independent reading of a
pooled linear layer followed by a sigmoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError
from .imgcore import Image, LuminanceMap, RegionMask

KIND_FIXED = "fixed"
KIND_AFFINE_OF_MEAN = "affine_of_mean"
KIND_PERCENTILE = "percentile"


@dataclass(frozen=True)
class ThresholdStrategy:
    kind: str
    tau: Optional[float] = None
    w: Optional[float] = None
    b: Optional[float] = None
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind == KIND_FIXED:
            if self.tau is None or not (0.0 < self.tau < 1.0):
                raise ConfigError(f"fixed threshold needs tau in (0, 1), got {self.tau}")
        elif self.kind == KIND_AFFINE_OF_MEAN:
            if self.w is None or self.b is None or \
                    not (math.isfinite(self.w) and math.isfinite(self.b)):
                raise ConfigError("affine_of_mean needs finite w and b")
        elif self.kind == KIND_PERCENTILE:
            if self.p is None or not (0.0 <= self.p <= 100.0):
                raise ConfigError(f"percentile needs p in [0, 100], got {self.p}")
        else:
            raise ConfigError(f"unknown threshold strategy {self.kind!r}")

    @classmethod
    def fixed(cls, tau: float) -> "ThresholdStrategy":
        return cls(kind=KIND_FIXED, tau=tau)

    @classmethod
    def affine_of_mean(cls, w: float, b: float) -> "ThresholdStrategy":
        return cls(kind=KIND_AFFINE_OF_MEAN, w=w, b=b)

    @classmethod
    def percentile(cls, p: float) -> "ThresholdStrategy":
        return cls(kind=KIND_PERCENTILE, p=p)


@dataclass(frozen=True)
class MaskResult:
    tau: float
    mask: RegionMask
    coverage: float


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def compute_threshold(y: LuminanceMap, strategy: ThresholdStrategy) -> float:
    """Resolve a strategy into a concrete luminance threshold."""
    if strategy.kind == KIND_FIXED:
        return float(strategy.tau)
    if strategy.kind == KIND_AFFINE_OF_MEAN:
        mean_y = float(np.mean(y.data.astype(np.float64)))
        tau = sigmoid(strategy.w * mean_y + strategy.b)
        # sigmoid saturates in float64; keep the documented open interval
        return min(max(tau, math.nextafter(0.0, 1.0)), math.nextafter(1.0, 0.0))
    # nearest-rank percentile: the ceil(p/100 * N)-th smallest value
    values = np.sort(y.data, axis=None)
    rank = math.ceil(strategy.p / 100.0 * values.size)
    rank = min(max(rank, 1), values.size)
    return float(values[rank - 1])


def generate_mask(y: LuminanceMap, tau: float) -> MaskResult:
    """Binary mask keeping every pixel whose luma is >= tau (inclusive)."""
    if not math.isfinite(tau):
        raise ValueError(f"threshold must be finite, got {tau}")
    # compare in float64 so a float64 threshold is not coarsened
    mask = (y.data.astype(np.float64) >= tau).astype(np.uint8)
    coverage = float(mask.sum()) / mask.size
    return MaskResult(tau=tau, mask=RegionMask(mask), coverage=coverage)


def apply_mask(img: Image, mask: RegionMask) -> Image:
    """Multiply every channel by the single-channel binary mask."""
    if (img.height, img.width) != (mask.height, mask.width):
        raise DimensionError(
            f"mask {mask.height}x{mask.width} does not match image {img.height}x{img.width}"
        )
    out = img.data * mask.data[:, :, None].astype(np.float32)
    return Image(out, space=img.space, headroom=img.headroom)
