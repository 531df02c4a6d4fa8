"""Spatial position estimation for transformed flares.

Recovers, for each affine-transformed flare, the depth of its light source
(average background depth over the light-source region) and the incident
angle implied by the source's mean distance from the image center and the
camera's horizontal field of view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .augment import AffineParams
from .errors import BoundsError, ConfigError, EmptyFlareError
from .imgcore import DepthMap, Image, RegionMask, luma601

SOURCE_PROVIDED = "provided_mask"
SOURCE_THRESHOLD = "luminance_threshold"
SOURCE_FALLBACK = "brightest_fallback"


@dataclass(frozen=True)
class LightSourceRegion:
    """Set of pixel coordinates treated as one flare's light source.

    ``coords`` is an (N, 2) int64 array of (x, y) pairs in row-major order;
    ``source`` records how the region was obtained.
    """

    coords: np.ndarray
    source: str

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.int64, copy=True)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("region coordinates must be a non-empty (N, 2) array")
        if self.source not in (SOURCE_PROVIDED, SOURCE_THRESHOLD, SOURCE_FALLBACK):
            raise ValueError(f"unknown region source {self.source!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def count(self) -> int:
        return self.coords.shape[0]

    def to_mask(self, width: int, height: int) -> RegionMask:
        grid = np.zeros((height, width), dtype=np.uint8)
        grid[self.coords[:, 1], self.coords[:, 0]] = 1
        return RegionMask(grid)


@dataclass(frozen=True)
class FlarePlacement:
    """Geometry and photometry of one placed flare."""

    affine: AffineParams
    depth_d: float
    radius_r: float
    theta: float
    scale_s: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.depth_d) and self.depth_d > 0):
            raise ValueError(f"depth must be positive and finite, got {self.depth_d}")
        if not (math.isfinite(self.radius_r) and self.radius_r >= 0):
            raise ValueError(f"radius must be non-negative, got {self.radius_r}")
        if not (0.0 <= self.theta < math.pi / 2):
            raise ValueError(f"incident angle must lie in [0, pi/2), got {self.theta}")
        if self.scale_s is not None and not (math.isfinite(self.scale_s) and self.scale_s >= 0):
            raise ValueError(f"scale must be non-negative and finite, got {self.scale_s}")


def _coords_from_mask(mask: np.ndarray) -> np.ndarray:
    ys, xs = np.nonzero(mask)
    return np.stack([xs, ys], axis=1).astype(np.int64)


def extract_light_source(flare: Image, provided: Optional[RegionMask],
                         tau_ls: float = 0.97) -> LightSourceRegion:
    """Locate the light-source pixels of a transformed flare.

    Preference order: a provided (already transformed) mask with at least
    one set pixel; else pixels whose luma reaches ``tau_ls``; else the
    brightest ceil(0.1%) of pixels. An all-black flare has no light source
    and raises EmptyFlareError.
    """
    if not (0.0 < tau_ls < 1.0):
        raise ConfigError(f"tau_ls must lie in (0, 1), got {tau_ls}")
    y = luma601(flare.data)
    if y.max() <= 0.0:
        raise EmptyFlareError("flare image is entirely black")
    if provided is not None:
        if provided.data.shape != y.shape:
            raise BoundsError("provided mask dimensions do not match the flare")
        if provided.count > 0:
            return LightSourceRegion(_coords_from_mask(provided.data), SOURCE_PROVIDED)
    above = y >= tau_ls
    if above.any():
        return LightSourceRegion(_coords_from_mask(above), SOURCE_THRESHOLD)
    k = math.ceil(0.001 * y.size)
    order = np.argsort(-y, axis=None, kind="stable")[:k]
    xs = order % y.shape[1]
    ys = order // y.shape[1]
    coords = np.stack([xs, ys], axis=1).astype(np.int64)
    return LightSourceRegion(coords, SOURCE_FALLBACK)


def mean_depth(depth: DepthMap, region: LightSourceRegion) -> float:
    """Average depth over the region's pixels."""
    xs, ys = region.coords[:, 0], region.coords[:, 1]
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= depth.width or ys.max() >= depth.height:
        raise BoundsError("region extends outside the depth map")
    return float(np.mean(depth.data[ys, xs].astype(np.float64)))


def mean_radius(region: LightSourceRegion, width: int, height: int) -> float:
    """Average distance from the region's pixel centers to the image center."""
    xs = region.coords[:, 0].astype(np.float64) + 0.5
    ys = region.coords[:, 1].astype(np.float64) + 0.5
    d = np.hypot(xs - width / 2.0, ys - height / 2.0)
    return float(np.mean(d))


def incident_angle(radius_r: float, width: int, fov_phi: float) -> float:
    """Incident angle from the similar-triangles model.

    theta = arctan((2 r / W) * tan(phi / 2)), always in [0, pi/2).
    ``fov_phi`` is the horizontal field of view in radians.
    """
    if not (0.0 < fov_phi < math.pi):
        raise ConfigError(f"field of view must lie in (0, pi) radians, got {fov_phi}")
    if radius_r < 0:
        raise ValueError(f"radius must be non-negative, got {radius_r}")
    return math.atan((2.0 * radius_r / width) * math.tan(fov_phi / 2.0))
