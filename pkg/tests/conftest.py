"""Shared deterministic fixtures: synthetic flares, backgrounds, depth maps."""

import numpy as np
import pytest

from flareforge import DepthMap, Image, RegionMask, write_mask, write_pfm, write_png


def make_flare_array(size=64, core_radius=3.0, glow_sigma=10.0, streaks=6):
    """Synthetic scattering flare on black: saturated core, glow, streaks.

    Content fades to zero inside the inscribed circle so rotations about
    the center keep the full energy in frame.
    """
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    cx = cy = size / 2.0
    r = np.hypot(x + 0.5 - cx, y + 0.5 - cy)
    ang = np.arctan2(y + 0.5 - cy, x + 0.5 - cx)
    glow = np.exp(-(r * r) / (2.0 * glow_sigma * glow_sigma))
    streak = 0.35 * np.exp(-r / (0.3 * size)) * np.cos(streaks * ang) ** 8
    rolloff = np.clip((0.46 * size - r) / (0.06 * size), 0.0, 1.0)
    base = np.clip(glow + streak, 0.0, 1.0) * rolloff
    rgb = np.stack([base, base * 0.92, base * 0.8], axis=2)
    rgb[r <= core_radius] = 1.0  # saturated white core
    return np.clip(rgb, 0.0, 1.0).astype(np.float32)


def make_flare_template(size=64, core_radius=3.0):
    return Image(make_flare_array(size, core_radius))


def make_core_mask(size=64, core_radius=3.0):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    c = size / 2.0
    r = np.hypot(x + 0.5 - c, y + 0.5 - c)
    return RegionMask((r <= core_radius).astype(np.uint8))


def make_background(width=64, height=64, seed=0, peak=0.35):
    rng = np.random.default_rng(seed)
    data = rng.uniform(0.02, peak, size=(height, width, 3))
    return Image(data.astype(np.float32))


def make_constant_depth(width=64, height=64, value=2.0):
    return DepthMap(np.full((height, width), value, dtype=np.float32))


def make_split_depth(width=64, height=64, left=1.0, right=2.0):
    """Depth map whose left half is `left` and right half is `right`."""
    data = np.full((height, width), right, dtype=np.float32)
    data[:, : width // 2] = left
    return DepthMap(data)


def write_dataset_inputs(root, n_backgrounds=2, size=64, template_size=None,
                         with_ls=True, depth="constant", seed=100):
    """Lay out backgrounds/, depths/, flares/ ready for run_dataset."""
    template_size = template_size or size
    bg_dir = root / "backgrounds"
    depth_dir = root / "depths"
    flare_dir = root / "flares"
    for i in range(n_backgrounds):
        write_png(make_background(size, size, seed=seed + i), bg_dir / f"bg{i}.png")
        if depth == "constant":
            dm = make_constant_depth(size, size, value=2.0 + i)
        else:
            dm = make_split_depth(size, size)
        write_pfm(dm, depth_dir / f"bg{i}.pfm")
    write_png(make_flare_template(template_size), flare_dir / "flare0.png")
    if with_ls:
        write_mask(make_core_mask(template_size), flare_dir / "flare0_ls.png")
    return bg_dir, depth_dir, flare_dir


@pytest.fixture
def flare_template():
    return make_flare_template()


@pytest.fixture
def core_mask():
    return make_core_mask()
