"""Core pixel containers, color conversions, and file IO.

All images are stored as float32 in [0, 1], row-major, RGB channel order.
Types are immutable after construction (the backing arrays are marked
read-only), so values can be shared freely between threads.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import DimensionError, FormatError

ENCODED = "encoded"
LINEAR = "linear"

# ITU-R BT.601 luma weights for R, G, B.
_BT601 = np.array([0.299, 0.587, 0.114], dtype=np.float64)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Image:
    """H x W x 3 float32 RGB image.

    ``space`` records whether samples are gamma-encoded or linear light.
    ``headroom`` marks intermediate images whose samples may exceed 1
    (e.g. flares brightened before the final clipped composition); plain
    images are validated to lie in [0, 1].
    """

    data: np.ndarray
    space: str = ENCODED
    headroom: bool = False

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"image must be HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError("image must be at least 1x1")
        if self.space not in (ENCODED, LINEAR):
            raise ValueError(f"unknown color space tag {self.space!r}")
        if not np.isfinite(arr).all():
            raise ValueError("image contains non-finite samples")
        if self.headroom:
            if arr.min() < 0.0:
                raise ValueError("headroom image contains negative samples")
        elif arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DepthMap:
    """H x W float32 map of strictly positive relative depths."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"depth map must be HxW, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("depth map contains non-finite values")
        if arr.min() <= 0.0:
            raise ValueError("depth values must be strictly positive")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RegionMask:
    """H x W binary mask, one uint8 {0, 1} per pixel."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.uint8, copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"mask must be HxW, got shape {arr.shape}")
        if arr.max(initial=0) > 1:
            raise ValueError("mask values must be 0 or 1")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class LuminanceMap:
    """H x W float32 BT.601 luma (Y') plane in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"luminance map must be HxW, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("luminance map contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("luminance values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def _read_png_header(path: Path) -> tuple[int, int]:
    """Return (bit_depth, color_type) from the IHDR chunk."""
    with open(path, "rb") as fh:
        head = fh.read(33)
    if len(head) < 33 or head[:8] != _PNG_MAGIC:
        raise FormatError(f"{path}: not a PNG file")
    # IHDR payload starts at byte 16: width(4) height(4) depth(1) colortype(1)
    bit_depth = head[24]
    color_type = head[25]
    return bit_depth, color_type


def load_png(path) -> Image:
    """Load an 8- or 16-bit RGB/RGBA PNG as an encoded-space Image.

    Samples are scaled to [0, 1]; an alpha channel, if present, is dropped.
    Raises IOError for missing/corrupt files and FormatError for
    unsupported bit depths or color types.
    """
    path = Path(path)
    if not path.is_file():
        raise IOError(f"{path}: no such file")
    bit_depth, color_type = _read_png_header(path)
    if bit_depth not in (8, 16):
        raise FormatError(f"{path}: unsupported PNG bit depth {bit_depth}")
    if color_type not in (2, 6):
        raise FormatError(f"{path}: unsupported PNG color type {color_type} (need RGB or RGBA)")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"{path}: failed to decode PNG")
    # OpenCV returns BGR(A); keep RGB, drop alpha.
    rgb = raw[:, :, 2::-1]
    full_scale = 65535.0 if raw.dtype == np.uint16 else 255.0
    data = rgb.astype(np.float64) / full_scale
    return Image(data.astype(np.float32), space=ENCODED)


def quantize_u8(data: np.ndarray) -> np.ndarray:
    """Quantize float samples in [0, 1] to uint8 with round-half-up."""
    scaled = np.floor(np.asarray(data, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def write_png(img: Image, path) -> None:
    """Write an Image to an 8-bit RGB PNG (round-half-up quantization)."""
    if img.headroom:
        raise ValueError("cannot write a headroom-carrying image; clip it first")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    u8 = quantize_u8(img.data)
    if not cv2.imwrite(str(path), u8[:, :, ::-1]):
        raise IOError(f"{path}: failed to write PNG")


def load_mask(path) -> RegionMask:
    """Load a binary mask PNG; sample >= 128 maps to 1, else 0."""
    path = Path(path)
    if not path.is_file():
        raise IOError(f"{path}: no such file")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"{path}: failed to decode PNG")
    if raw.ndim == 3:
        raw = raw[:, :, 0]
    if raw.dtype == np.uint16:
        return RegionMask((raw >= 32768).astype(np.uint8))
    return RegionMask((raw >= 128).astype(np.uint8))


def write_mask(mask: RegionMask, path) -> None:
    """Write a binary mask as an 8-bit grayscale PNG (0 / 255)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), mask.data * np.uint8(255)):
        raise IOError(f"{path}: failed to write PNG")


_PFM_DIMS = re.compile(rb"^(\d+)\s+(\d+)\s*$")


def load_pfm(path, invert: bool = False, epsilon: float = 1e-6) -> DepthMap:
    """Load a grayscale PFM ("Pf") file as a DepthMap.

    If ``invert`` is set, each stored value v becomes 1/(v+epsilon), turning
    disparity-style maps into depth. All outputs are clamped to >= epsilon.
    PFM scale sign selects endianness; rows are stored bottom-up and are
    flipped to row-major top-down on load.
    """
    path = Path(path)
    if not path.is_file():
        raise IOError(f"{path}: no such file")
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header == b"PF":
            raise FormatError(f"{path}: color PFM not supported (need grayscale 'Pf')")
        if header != b"Pf":
            raise FormatError(f"{path}: not a PFM file (header {header!r})")
        dims = _PFM_DIMS.match(fh.readline().strip())
        if not dims:
            raise FormatError(f"{path}: malformed PFM dimension line")
        width, height = int(dims.group(1)), int(dims.group(2))
        try:
            scale = float(fh.readline().strip())
        except ValueError:
            raise FormatError(f"{path}: malformed PFM scale line") from None
        endian = "<" if scale < 0 else ">"
        payload = fh.read(width * height * 4)
    if len(payload) != width * height * 4:
        raise FormatError(f"{path}: truncated PFM payload")
    values = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width)
    values = values[::-1].astype(np.float64)
    if not np.isfinite(values).all():
        raise ValueError(f"{path}: PFM contains non-finite entries")
    if invert:
        values = 1.0 / (values + epsilon)
    values = np.maximum(values, epsilon)
    return DepthMap(values.astype(np.float32))


def write_pfm(depth: DepthMap, path) -> None:
    """Write a DepthMap as a little-endian grayscale PFM (scale -1)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{depth.width} {depth.height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(depth.data[::-1].astype("<f4").tobytes())


def luma601(data: np.ndarray) -> np.ndarray:
    """BT.601 luma of an HxWx3 array, computed in float64."""
    return np.asarray(data, dtype=np.float64) @ _BT601


def to_luma_bt601(img: Image) -> LuminanceMap:
    """Extract the Y' plane of an encoded-space image (ITU-R BT.601)."""
    if img.space != ENCODED:
        raise ValueError("BT.601 luma is defined on encoded-space images")
    y = np.clip(luma601(img.data), 0.0, 1.0)
    return LuminanceMap(y.astype(np.float32))


def gamma_decode(img: Image, gamma: float) -> Image:
    """Raise samples to ``gamma``: encoded -> linear light."""
    if not (gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")
    out = np.power(img.data.astype(np.float64), gamma)
    return Image(out.astype(np.float32), space=LINEAR, headroom=img.headroom)


def gamma_encode(img: Image, gamma: float) -> Image:
    """Raise samples to ``1/gamma``: linear light -> encoded."""
    if not (gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma}")
    out = np.power(img.data.astype(np.float64), 1.0 / gamma)
    return Image(out.astype(np.float32), space=ENCODED, headroom=img.headroom)


def add_clip(base: Image, addend: Image) -> Image:
    """Per-pixel base + addend, clipped to [0, 1].

    Both images must share dimensions and color-space tags; the addend may
    carry headroom (pre-clip brightened flares).
    """
    if base.data.shape != addend.data.shape:
        raise DimensionError(
            f"shape mismatch: {base.data.shape} vs {addend.data.shape}"
        )
    if base.space != addend.space:
        raise ValueError(f"color space mismatch: {base.space} vs {addend.space}")
    total = base.data.astype(np.float64) + addend.data.astype(np.float64)
    out = np.clip(total, 0.0, 1.0)
    return Image(out.astype(np.float32), space=base.space)
