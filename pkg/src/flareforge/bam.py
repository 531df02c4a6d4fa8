"""Brightness adjustment from relative illumination.

Illumination at the lens falls with the squared distance of the light
source and the cosine of the incident angle. A flare at depth d and angle
theta is therefore scaled by (dbar/d)^2 * cos(theta), where dbar is the
mean depth of all light sources in the frame: light arriving head-on from
depth dbar is the reference and keeps scale 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgcore import Image
from .spe import FlarePlacement


@dataclass(frozen=True)
class BrightnessContext:
    """The placements of one frame plus their shared reference depth."""

    placements: tuple[FlarePlacement, ...]
    mean_depth_dbar: float

    @classmethod
    def from_placements(cls, placements: list[FlarePlacement]) -> "BrightnessContext":
        if not placements:
            raise ValueError("at least one placement is required")
        depths = [p.depth_d for p in placements]
        for d in depths:
            if not (d > 0):
                raise ValueError(f"depth must be positive, got {d}")
        if all(d == depths[0] for d in depths):
            # shared depth: take it verbatim so the scale ratio is exactly 1
            dbar = depths[0]
        else:
            dbar = math.fsum(depths) / len(depths)
        return cls(placements=tuple(placements), mean_depth_dbar=dbar)

    def scales(self) -> list[float]:
        return [(self.mean_depth_dbar / p.depth_d) ** 2 * math.cos(p.theta)
                for p in self.placements]


def brightness_scales(placements: list[FlarePlacement]) -> list[float]:
    """Per-flare multiplicative scales (dbar/d_i)^2 * cos(theta_i).

    Output order matches input order; dbar is the mean depth over all
    placements, so light arriving head-on from dbar keeps scale 1.
    """
    return BrightnessContext.from_placements(placements).scales()


def apply_scale(flare: Image, s: float) -> Image:
    """Multiply a flare by ``s`` without clipping.

    Clipping happens only at the final composition, so the result may
    exceed 1 and is tagged as headroom-carrying.
    """
    if not (math.isfinite(s) and s >= 0):
        raise ValueError(f"scale must be non-negative and finite, got {s}")
    out = flare.data.astype(np.float64) * s
    return Image(out.astype(np.float32), space=flare.space, headroom=True)
