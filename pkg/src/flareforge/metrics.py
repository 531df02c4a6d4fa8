"""Full-frame and region-restricted restoration quality metrics.

PSNR uses peak 1.0 with the MSE taken over all channels. SSIM follows the
standard windowed formulation: 11x11 Gaussian window (sigma 1.5), K1=0.01,
K2=0.03, L=1, weighted (population) moments, computed per RGB channel and
averaged, with the mean taken over window positions that fit entirely
inside the frame. Region-restricted PSNR averages the squared error over
the masked pixels only, which is how glare/streak-region scores are
reported for annotated test sets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionError, EmptyRegionError, PairingError
from .imgcore import Image, RegionMask, load_mask, load_png

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _check_same_shape(a: Image, b: Image) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    _check_same_shape(a, b)
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel() -> np.ndarray:
    half = (_SSIM_WINDOW - 1) // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    return k / k.sum()


_KERNEL_1D = _gaussian_kernel()


def _windowed_mean(plane: np.ndarray) -> np.ndarray:
    """Gaussian-weighted local mean, cropped to fully interior windows."""
    half = (_SSIM_WINDOW - 1) // 2
    out = correlate1d(plane, _KERNEL_1D, axis=0, mode="nearest")
    out = correlate1d(out, _KERNEL_1D, axis=1, mode="nearest")
    return out[half:-half, half:-half]


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    c1 = (_SSIM_K1 * 1.0) ** 2
    c2 = (_SSIM_K2 * 1.0) ** 2
    mu_x = _windowed_mean(x)
    mu_y = _windowed_mean(y)
    mu_xx = _windowed_mean(x * x)
    mu_yy = _windowed_mean(y * y)
    mu_xy = _windowed_mean(x * y)
    var_x = mu_xx - mu_x * mu_x
    var_y = mu_yy - mu_y * mu_y
    cov = mu_xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a: Image, b: Image) -> float:
    """Mean local SSIM, averaged over the RGB channels."""
    _check_same_shape(a, b)
    if a.height < _SSIM_WINDOW or a.width < _SSIM_WINDOW:
        raise DimensionError(
            f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM"
        )
    x = a.data.astype(np.float64)
    y = b.data.astype(np.float64)
    return float(np.mean([_ssim_plane(x[:, :, c], y[:, :, c]) for c in range(3)]))


def masked_psnr(a: Image, b: Image, region: RegionMask) -> float:
    """PSNR with the MSE averaged over region pixels only (all channels)."""
    _check_same_shape(a, b)
    if (region.height, region.width) != (a.height, a.width):
        raise DimensionError("region mask does not match the images")
    sel = region.data.astype(bool)
    if not sel.any():
        raise EmptyRegionError("region mask selects no pixels")
    diff = a.data.astype(np.float64)[sel] - b.data.astype(np.float64)[sel]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


@dataclass
class PerImageMetrics:
    name: str
    psnr: float
    ssim: float
    g_psnr: Optional[float] = None
    s_psnr: Optional[float] = None
    flare_psnr: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "psnr": _json_db(self.psnr), "ssim": self.ssim}
        if self.g_psnr is not None:
            d["g_psnr"] = _json_db(self.g_psnr)
        if self.s_psnr is not None:
            d["s_psnr"] = _json_db(self.s_psnr)
        if self.flare_psnr is not None:
            d["flare_psnr"] = _json_db(self.flare_psnr)
        return d


def _json_db(value: float):
    # infinite PSNR is serialized as null; text reports print "inf"
    return None if math.isinf(value) else value


@dataclass
class MetricsReport:
    per_image: list[PerImageMetrics] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_image": [m.to_dict() for m in self.per_image],
            "aggregate": {k: _json_db(v) if isinstance(v, float) else v
                          for k, v in self.aggregate.items()},
            "skipped": self.skipped,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _aggregate_metric(report: MetricsReport, key: str) -> Optional[float]:
    """Mean of finite per-image values; non-finite entries are skipped."""
    values = []
    for m in report.per_image:
        v = getattr(m, key)
        if v is None:
            continue
        if math.isfinite(v):
            values.append(v)
        else:
            report.skipped.append({"name": m.name, "metric": key, "reason": "infinite"})
    if not values:
        return None
    return float(np.mean(values))


def _matched_names(pred_dir: Path, gt_dir: Path) -> list[str]:
    pred_names = sorted(p.name for p in pred_dir.glob("*.png"))
    gt_names = sorted(p.name for p in gt_dir.glob("*.png"))
    if pred_names != gt_names:
        extra = sorted(set(pred_names) ^ set(gt_names))
        raise PairingError(f"prediction/ground-truth filenames do not match: {extra}")
    if not pred_names:
        raise PairingError(f"no PNG files found in {pred_dir}")
    return pred_names


def _mask_for(name: str, mask_dir: Optional[Path]) -> Optional[RegionMask]:
    if mask_dir is None:
        return None
    path = mask_dir / name
    if not path.is_file():
        raise PairingError(f"missing mask for {name} in {mask_dir}")
    return load_mask(path)


def evaluate_dirs(pred_dir, gt_dir, glare_mask_dir=None, streak_mask_dir=None,
                  flare_mask_dir=None) -> MetricsReport:
    """Score every prediction against its ground truth by filename.

    Optional mask directories add region-restricted PSNR columns: glare and
    streak annotations give G-PSNR / S-PSNR, while a single combined mask
    set (e.g. the synthesizer's flare masks) is reported as flare-region
    PSNR instead.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    glare_mask_dir = Path(glare_mask_dir) if glare_mask_dir else None
    streak_mask_dir = Path(streak_mask_dir) if streak_mask_dir else None
    flare_mask_dir = Path(flare_mask_dir) if flare_mask_dir else None

    report = MetricsReport()
    for name in _matched_names(pred_dir, gt_dir):
        pred = load_png(pred_dir / name)
        gt = load_png(gt_dir / name)
        entry = PerImageMetrics(name=name, psnr=psnr(pred, gt), ssim=ssim(pred, gt))
        glare = _mask_for(name, glare_mask_dir)
        if glare is not None:
            entry.g_psnr = masked_psnr(pred, gt, glare)
        streak = _mask_for(name, streak_mask_dir)
        if streak is not None:
            entry.s_psnr = masked_psnr(pred, gt, streak)
        combined = _mask_for(name, flare_mask_dir)
        if combined is not None:
            entry.flare_psnr = masked_psnr(pred, gt, combined)
        report.per_image.append(entry)

    report.aggregate["count"] = len(report.per_image)
    for key in ("psnr", "ssim", "g_psnr", "s_psnr", "flare_psnr"):
        if key not in ("psnr", "ssim") and all(
                getattr(m, key) is None for m in report.per_image):
            continue
        report.aggregate[key] = _aggregate_metric(report, key)
    return report
