"""End-to-end pair synthesis: sample, transform, estimate, scale, compose.

One synthesized pair is a pure function of (config, inputs, pair_index):
all randomness flows through per-purpose RNG streams derived from the
master seed, every sampled parameter lands in a SynthRecord, and replaying
a record reproduces the pair bit-identically. The dataset runner may fan
pairs out over worker threads without changing any output byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bam, spe
from .augment import (AffineParams, AffineRanges, SeededRng, apply_affine,
                      apply_affine_mask, derive_stream_index, sample_affine)
from .errors import ConfigError, DimensionError, MissingDepthError
from .imgcore import (ENCODED, LINEAR, DepthMap, Image, RegionMask, load_mask,
                      load_pfm, load_png, luma601, write_mask, write_png)

FOV_FIXED = "fixed"
FOV_RANDOM_CHOICE = "random_choice"

GT_AUTO = "auto"
GT_BACKGROUND_ONLY = "background_only"
GT_WITH_LIGHT_SOURCE = "background_plus_light_source"

# pre-clip flare luma at or above one 8-bit step counts as flare-affected
FLARE_MASK_THRESHOLD = 1.0 / 255.0

DEFAULT_FOV_CHOICES = (20.0, 40.0, 60.0, 80.0, 100.0)


@dataclass(frozen=True)
class AffineConfig:
    """Affine sampling ranges in user units (degrees / fraction of min dim)."""

    rotation_deg: tuple[float, float] = (0.0, 360.0)
    scale: tuple[float, float] = (0.8, 1.5)
    translate_frac: tuple[float, float] = (-0.3, 0.3)
    shear_deg: tuple[float, float] = (-10.0, 10.0)

    def validate(self) -> None:
        for name in ("rotation_deg", "scale", "translate_frac", "shear_deg"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ConfigError(f"affine range {name} is invalid: [{lo}, {hi}]")
        if self.scale[0] <= 0:
            raise ConfigError(f"affine scale range must be positive, got {self.scale}")

    def to_ranges(self, width: int, height: int) -> AffineRanges:
        extent = float(min(width, height))
        tx = (self.translate_frac[0] * extent, self.translate_frac[1] * extent)
        return AffineRanges(
            rotation=(math.radians(self.rotation_deg[0]), math.radians(self.rotation_deg[1])),
            scale=self.scale,
            translate_x=tx,
            translate_y=tx,
            shear=(math.radians(self.shear_deg[0]), math.radians(self.shear_deg[1])),
        )

    def to_dict(self) -> dict:
        return {
            "rotation_deg": list(self.rotation_deg),
            "scale": list(self.scale),
            "translate_frac": list(self.translate_frac),
            "shear_deg": list(self.shear_deg),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AffineConfig":
        kwargs = {}
        for name in ("rotation_deg", "scale", "translate_frac", "shear_deg"):
            if name in d:
                lo, hi = d[name]
                kwargs[name] = (float(lo), float(hi))
        return cls(**kwargs)


@dataclass(frozen=True)
class SynthConfig:
    master_seed: int = 0
    fov_mode: str = FOV_RANDOM_CHOICE
    fov_degrees: tuple[float, ...] = DEFAULT_FOV_CHOICES
    flare_count: tuple[int, int] = (1, 3)
    gamma_range: Optional[tuple[float, float]] = (1.8, 2.2)
    compose_space: str = LINEAR
    gt_mode: str = GT_AUTO
    tau_ls: float = 0.97
    max_scale: float = math.inf
    depth_inverse: bool = False
    depth_epsilon: float = 1e-6
    affine: AffineConfig = field(default_factory=AffineConfig)

    def validate(self) -> None:
        if self.fov_mode not in (FOV_FIXED, FOV_RANDOM_CHOICE):
            raise ConfigError(f"unknown fov mode {self.fov_mode!r}")
        if not self.fov_degrees:
            raise ConfigError("at least one field-of-view value is required")
        for deg in self.fov_degrees:
            if not (0.0 < deg < 180.0):
                raise ConfigError(f"field of view must lie in (0, 180) degrees, got {deg}")
        if self.fov_mode == FOV_FIXED and len(self.fov_degrees) != 1:
            raise ConfigError("fixed fov mode takes exactly one value")
        lo, hi = self.flare_count
        if (lo, hi) != (0, 0) and not (1 <= lo <= hi <= 8):
            raise ConfigError(f"flare count range must lie within [1, 8], got [{lo}, {hi}]")
        if self.gamma_range is not None:
            glo, ghi = self.gamma_range
            if not (0.0 < glo <= ghi):
                raise ConfigError(f"gamma range must be positive, got [{glo}, {ghi}]")
        if self.compose_space not in (LINEAR, ENCODED):
            raise ConfigError(f"unknown compose space {self.compose_space!r}")
        if self.compose_space == LINEAR and self.gamma_range is None:
            raise ConfigError("linear composition requires a gamma range; "
                              "use compose_space=encoded to disable gamma handling")
        if self.gt_mode not in (GT_AUTO, GT_BACKGROUND_ONLY, GT_WITH_LIGHT_SOURCE):
            raise ConfigError(f"unknown gt mode {self.gt_mode!r}")
        if not (0.0 < self.tau_ls < 1.0):
            raise ConfigError(f"tau_ls must lie in (0, 1), got {self.tau_ls}")
        if not (self.max_scale > 0):
            raise ConfigError(f"max_scale must be positive, got {self.max_scale}")
        if not (self.depth_epsilon > 0):
            raise ConfigError(f"depth_epsilon must be positive, got {self.depth_epsilon}")
        self.affine.validate()

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "fov_mode": self.fov_mode,
            "fov_degrees": list(self.fov_degrees),
            "flare_count": list(self.flare_count),
            "gamma_range": list(self.gamma_range) if self.gamma_range else None,
            "compose_space": self.compose_space,
            "gt_mode": self.gt_mode,
            "tau_ls": self.tau_ls,
            "max_scale": None if math.isinf(self.max_scale) else self.max_scale,
            "depth_inverse": self.depth_inverse,
            "depth_epsilon": self.depth_epsilon,
            "affine": self.affine.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "master_seed" in d:
            kwargs["master_seed"] = int(d["master_seed"])
        if "fov_mode" in d:
            kwargs["fov_mode"] = str(d["fov_mode"])
        if "fov_degrees" in d:
            vals = d["fov_degrees"]
            if isinstance(vals, (int, float)):
                vals = [vals]
            kwargs["fov_degrees"] = tuple(float(v) for v in vals)
        if "flare_count" in d:
            lo, hi = d["flare_count"]
            kwargs["flare_count"] = (int(lo), int(hi))
        if "gamma_range" in d:
            rng = d["gamma_range"]
            kwargs["gamma_range"] = None if rng is None else (float(rng[0]), float(rng[1]))
        if "compose_space" in d:
            kwargs["compose_space"] = str(d["compose_space"])
        if "gt_mode" in d:
            kwargs["gt_mode"] = str(d["gt_mode"])
        if "tau_ls" in d:
            kwargs["tau_ls"] = float(d["tau_ls"])
        if "max_scale" in d:
            kwargs["max_scale"] = math.inf if d["max_scale"] is None else float(d["max_scale"])
        if "depth_inverse" in d:
            kwargs["depth_inverse"] = bool(d["depth_inverse"])
        if "depth_epsilon" in d:
            kwargs["depth_epsilon"] = float(d["depth_epsilon"])
        if "affine" in d:
            kwargs["affine"] = AffineConfig.from_dict(d["affine"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class FlareTemplate:
    """A flare image plus its optional light-source annotation."""

    template_id: str
    image: Image
    ls_mask: Optional[RegionMask] = None
    path: Optional[str] = None
    ls_path: Optional[str] = None


@dataclass
class FlareRecordEntry:
    flare_index: int
    affine: AffineParams
    depth_d: float
    radius_r: float
    theta: float
    scale_raw: float
    scale_applied: float
    light_source: dict

    def to_dict(self) -> dict:
        return {
            "flare_index": self.flare_index,
            "affine": self.affine.to_dict(),
            "depth_d": self.depth_d,
            "radius_r": self.radius_r,
            "theta": self.theta,
            "scale_raw": self.scale_raw,
            "scale_applied": self.scale_applied,
            "light_source": self.light_source,
        }


@dataclass
class SynthRecord:
    """Full provenance of one synthesized pair; enough to replay it."""

    pair_index: int
    master_seed: int
    background_path: Optional[str]
    depth_path: Optional[str]
    template_id: str
    template_path: Optional[str]
    ls_mask_path: Optional[str]
    fov_degrees: float
    gamma: Optional[float]
    compose_space: str
    gt_mode_effective: str
    tau_ls: float
    max_scale: Optional[float]
    depth_inverse: bool
    depth_epsilon: float
    flares: list[FlareRecordEntry] = field(default_factory=list)
    outputs: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "pair_index": self.pair_index,
            "master_seed": self.master_seed,
            "background_path": self.background_path,
            "depth_path": self.depth_path,
            "template_id": self.template_id,
            "template_path": self.template_path,
            "ls_mask_path": self.ls_mask_path,
            "fov_degrees": self.fov_degrees,
            "gamma": self.gamma,
            "compose_space": self.compose_space,
            "gt_mode_effective": self.gt_mode_effective,
            "tau_ls": self.tau_ls,
            "max_scale": self.max_scale,
            "depth_inverse": self.depth_inverse,
            "depth_epsilon": self.depth_epsilon,
            "flares": [f.to_dict() for f in self.flares],
            "outputs": self.outputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthRecord":
        flares = [
            FlareRecordEntry(
                flare_index=int(f["flare_index"]),
                affine=AffineParams.from_dict(f["affine"]),
                depth_d=float(f["depth_d"]),
                radius_r=float(f["radius_r"]),
                theta=float(f["theta"]),
                scale_raw=float(f["scale_raw"]),
                scale_applied=float(f["scale_applied"]),
                light_source=dict(f["light_source"]),
            )
            for f in d["flares"]
        ]
        return cls(
            pair_index=int(d["pair_index"]),
            master_seed=int(d["master_seed"]),
            background_path=d.get("background_path"),
            depth_path=d.get("depth_path"),
            template_id=str(d["template_id"]),
            template_path=d.get("template_path"),
            ls_mask_path=d.get("ls_mask_path"),
            fov_degrees=float(d["fov_degrees"]),
            gamma=None if d.get("gamma") is None else float(d["gamma"]),
            compose_space=str(d["compose_space"]),
            gt_mode_effective=str(d["gt_mode_effective"]),
            tau_ls=float(d["tau_ls"]),
            max_scale=None if d.get("max_scale") is None else float(d["max_scale"]),
            depth_inverse=bool(d["depth_inverse"]),
            depth_epsilon=float(d["depth_epsilon"]),
            flares=flares,
            outputs=d.get("outputs"),
        )


@dataclass
class SynthResult:
    """A synthesized pair plus the intermediates useful for analysis."""

    input: Image
    gt: Image
    flare_mask: RegionMask
    record: SynthRecord
    placements: list[spe.FlarePlacement] = field(default_factory=list)
    scaled_flares: list[np.ndarray] = field(default_factory=list)
    preclip_flare_sum: Optional[np.ndarray] = None

    def as_tuple(self) -> tuple[Image, Image, RegionMask, SynthRecord]:
        return self.input, self.gt, self.flare_mask, self.record


def _compose(cfg: SynthConfig, bg: Image, depth: DepthMap, template: FlareTemplate,
             affines: Sequence[AffineParams], fov_degrees: float,
             gamma: Optional[float], gt_mode: str, pair_index: int) -> SynthResult:
    """Deterministic core shared by fresh synthesis and record replay."""
    width, height = bg.width, bg.height
    record = SynthRecord(
        pair_index=pair_index,
        master_seed=cfg.master_seed,
        background_path=None,
        depth_path=None,
        template_id=template.template_id,
        template_path=template.path,
        ls_mask_path=template.ls_path,
        fov_degrees=fov_degrees,
        gamma=gamma,
        compose_space=cfg.compose_space,
        gt_mode_effective=gt_mode,
        tau_ls=cfg.tau_ls,
        max_scale=None if math.isinf(cfg.max_scale) else cfg.max_scale,
        depth_inverse=cfg.depth_inverse,
        depth_epsilon=cfg.depth_epsilon,
    )

    if not affines:
        # zero-flare hook: the pair degenerates to the untouched background
        empty = RegionMask(np.zeros((height, width), dtype=np.uint8))
        return SynthResult(input=bg, gt=bg, flare_mask=empty, record=record,
                           preclip_flare_sum=np.zeros((height, width, 3)))

    fov_rad = math.radians(fov_degrees)
    warped_flares: list[Image] = []
    regions: list[spe.LightSourceRegion] = []
    gt_region_masks: list[RegionMask] = []
    placements: list[spe.FlarePlacement] = []
    for params in affines:
        warped = apply_affine(template.image, params, width, height)
        warped_ls = None
        if template.ls_mask is not None:
            warped_ls = apply_affine_mask(template.ls_mask, params, width, height)
        region = spe.extract_light_source(warped, warped_ls, cfg.tau_ls)
        d = spe.mean_depth(depth, region)
        r = spe.mean_radius(region, width, height)
        theta = spe.incident_angle(r, width, fov_rad)
        warped_flares.append(warped)
        regions.append(region)
        gt_region_masks.append(region.to_mask(width, height))
        placements.append(spe.FlarePlacement(affine=params, depth_d=d,
                                             radius_r=r, theta=theta))

    raw_scales = bam.brightness_scales(placements)
    applied_scales = [min(s, cfg.max_scale) for s in raw_scales]
    placements = [replace(p, scale_s=s) for p, s in zip(placements, applied_scales)]

    # compose-space float64 planes
    if cfg.compose_space == LINEAR:
        bg_plane = np.power(bg.data.astype(np.float64), gamma)
        flare_planes = [np.power(f.data.astype(np.float64), gamma) for f in warped_flares]
    else:
        bg_plane = bg.data.astype(np.float64)
        flare_planes = [f.data.astype(np.float64) for f in warped_flares]

    scaled = [plane * s for plane, s in zip(flare_planes, applied_scales)]
    flare_sum = scaled[0].copy()
    for extra in scaled[1:]:
        flare_sum += extra

    def encode(plane: np.ndarray) -> np.ndarray:
        if cfg.compose_space == LINEAR:
            return np.power(plane, 1.0 / gamma)
        return plane

    input_img = Image(encode(np.clip(bg_plane + flare_sum, 0.0, 1.0)).astype(np.float32),
                      space=ENCODED)

    if gt_mode == GT_WITH_LIGHT_SOURCE:
        gt_sum = np.zeros_like(flare_sum)
        for plane, mask in zip(scaled, gt_region_masks):
            gt_sum += plane * mask.data[:, :, None]
        gt_img = Image(encode(np.clip(bg_plane + gt_sum, 0.0, 1.0)).astype(np.float32),
                       space=ENCODED)
    else:
        gt_img = bg

    mask_luma = luma601(encode(flare_sum))
    flare_mask = RegionMask((mask_luma >= FLARE_MASK_THRESHOLD).astype(np.uint8))

    for k, (params, placement, raw, applied, region) in enumerate(
            zip(affines, placements, raw_scales, applied_scales, regions)):
        record.flares.append(FlareRecordEntry(
            flare_index=k,
            affine=params,
            depth_d=placement.depth_d,
            radius_r=placement.radius_r,
            theta=placement.theta,
            scale_raw=raw,
            scale_applied=applied,
            light_source={"source": region.source, "pixel_count": region.count},
        ))

    return SynthResult(input=input_img, gt=gt_img, flare_mask=flare_mask,
                       record=record, placements=placements, scaled_flares=scaled,
                       preclip_flare_sum=flare_sum)


def _effective_gt_mode(cfg: SynthConfig, template: FlareTemplate) -> str:
    if cfg.gt_mode != GT_AUTO:
        return cfg.gt_mode
    return GT_WITH_LIGHT_SOURCE if template.ls_mask is not None else GT_BACKGROUND_ONLY


def synthesize_pair_detailed(cfg: SynthConfig, bg: Image, depth: DepthMap,
                             templates: Sequence[FlareTemplate],
                             pair_index: int) -> SynthResult:
    """Synthesize one pair, returning intermediates alongside the outputs.

    Draw order (pair stream): template index, flare count, fov choice (in
    random_choice mode), gamma (in linear mode). Each flare's affine
    parameters come from an independent (pair_index, flare_index) stream.
    """
    cfg.validate()
    if (bg.height, bg.width) != (depth.height, depth.width):
        raise DimensionError(
            f"background {bg.height}x{bg.width} does not match depth "
            f"{depth.height}x{depth.width}")
    if not templates:
        raise ConfigError("at least one flare template is required")

    g = SeededRng(cfg.master_seed, derive_stream_index("pair", pair_index)).generator()
    template = templates[int(g.integers(0, len(templates)))]
    n_flares = int(g.integers(cfg.flare_count[0], cfg.flare_count[1] + 1))
    if cfg.fov_mode == FOV_RANDOM_CHOICE:
        fov_degrees = float(cfg.fov_degrees[int(g.integers(0, len(cfg.fov_degrees)))])
    else:
        fov_degrees = float(cfg.fov_degrees[0])
    gamma = None
    if cfg.compose_space == LINEAR:
        gamma = float(g.uniform(cfg.gamma_range[0], cfg.gamma_range[1]))

    ranges = cfg.affine.to_ranges(bg.width, bg.height)
    affines = [
        sample_affine(SeededRng(cfg.master_seed,
                                derive_stream_index("flare", pair_index, k)), ranges)
        for k in range(n_flares)
    ]

    gt_mode = _effective_gt_mode(cfg, template)
    return _compose(cfg, bg, depth, template, affines, fov_degrees, gamma,
                    gt_mode, pair_index)


def synthesize_pair(cfg: SynthConfig, bg: Image, depth: DepthMap,
                    templates: Sequence[FlareTemplate],
                    pair_index: int) -> tuple[Image, Image, RegionMask, SynthRecord]:
    """Synthesize one (input, ground-truth, flare-mask, record) tuple."""
    return synthesize_pair_detailed(cfg, bg, depth, templates, pair_index).as_tuple()


def replay_record(record: SynthRecord) -> SynthResult:
    """Re-synthesize a pair from its record; bit-identical to the original.

    All sampled parameters are taken from the record, so no RNG is
    involved; the referenced background/depth/template files must still
    exist at their recorded paths.
    """
    if record.background_path is None or record.depth_path is None \
            or record.template_path is None:
        raise ConfigError("record does not reference its input files")
    bg = load_png(record.background_path)
    depth = load_pfm(record.depth_path, invert=record.depth_inverse,
                     epsilon=record.depth_epsilon)
    ls = load_mask(record.ls_mask_path) if record.ls_mask_path else None
    template = FlareTemplate(
        template_id=record.template_id,
        image=load_png(record.template_path),
        ls_mask=ls,
        path=record.template_path,
        ls_path=record.ls_mask_path,
    )
    cfg = SynthConfig(
        master_seed=record.master_seed,
        fov_mode=FOV_FIXED,
        fov_degrees=(record.fov_degrees,),
        flare_count=(0, 0) if not record.flares else (len(record.flares), len(record.flares)),
        gamma_range=None if record.gamma is None else (record.gamma, record.gamma),
        compose_space=record.compose_space,
        gt_mode=record.gt_mode_effective,
        tau_ls=record.tau_ls,
        max_scale=math.inf if record.max_scale is None else record.max_scale,
        depth_inverse=record.depth_inverse,
        depth_epsilon=record.depth_epsilon,
    )
    affines = [f.affine for f in record.flares]
    result = _compose(cfg, bg, depth, template, affines, record.fov_degrees,
                      record.gamma, record.gt_mode_effective, record.pair_index)
    result.record.background_path = record.background_path
    result.record.depth_path = record.depth_path
    return result


def load_templates(flare_dir) -> list[FlareTemplate]:
    """Load flare templates (and ``<stem>_ls.png`` light-source masks)."""
    flare_dir = Path(flare_dir)
    if not flare_dir.is_dir():
        raise IOError(f"{flare_dir}: no such directory")
    templates = []
    for path in sorted(flare_dir.glob("*.png")):
        if path.stem.endswith("_ls"):
            continue
        ls_path = path.with_name(path.stem + "_ls.png")
        ls = load_mask(ls_path) if ls_path.is_file() else None
        templates.append(FlareTemplate(
            template_id=path.stem,
            image=load_png(path),
            ls_mask=ls,
            path=str(path),
            ls_path=str(ls_path) if ls is not None else None,
        ))
    if not templates:
        raise ConfigError(f"no flare templates found in {flare_dir}")
    return templates


def _list_backgrounds(background_dir: Path, depth_dir: Path) -> list[tuple[Path, Path]]:
    if not background_dir.is_dir():
        raise IOError(f"{background_dir}: no such directory")
    if not depth_dir.is_dir():
        raise IOError(f"{depth_dir}: no such directory")
    pairs = []
    for bg_path in sorted(background_dir.glob("*.png")):
        depth_path = depth_dir / (bg_path.stem + ".pfm")
        if not depth_path.is_file():
            raise MissingDepthError(f"no depth map {depth_path} for {bg_path}")
        pairs.append((bg_path, depth_path))
    if not pairs:
        raise ConfigError(f"no background images found in {background_dir}")
    return pairs


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _synth_one(cfg: SynthConfig, sources: list[tuple[Path, Path]],
               templates: list[FlareTemplate], out_dir: Path, index: int) -> dict:
    pick = SeededRng(cfg.master_seed, derive_stream_index("bg", index)).generator()
    bg_path, depth_path = sources[int(pick.integers(0, len(sources)))]
    bg = load_png(bg_path)
    depth = load_pfm(depth_path, invert=cfg.depth_inverse, epsilon=cfg.depth_epsilon)

    result = synthesize_pair_detailed(cfg, bg, depth, templates, index)
    record = result.record
    record.background_path = str(bg_path)
    record.depth_path = str(depth_path)

    name = f"{index:06d}"
    files = {
        "input": out_dir / "input" / f"{name}.png",
        "gt": out_dir / "gt" / f"{name}.png",
        "mask": out_dir / "mask" / f"{name}.png",
        "record": out_dir / "records" / f"{name}.json",
    }
    write_png(result.input, files["input"])
    write_png(result.gt, files["gt"])
    write_mask(result.flare_mask, files["mask"])
    # paths relative to the dataset root, so records do not depend on where
    # the dataset was written and identical runs stay byte-identical
    record.outputs = {k: str(files[k].relative_to(out_dir))
                      for k in ("input", "gt", "mask")}
    files["record"].parent.mkdir(parents=True, exist_ok=True)
    files["record"].write_text(record.to_json())

    return {
        "index": index,
        "files": {k: str(v) for k, v in files.items()},
        "digests": {k: _sha256(v) for k, v in files.items()},
    }


def run_dataset(cfg: SynthConfig, background_dir, depth_dir, flare_dir, out_dir,
                count: int, jobs: int = 1, first_index: int = 0,
                progress=None) -> dict:
    """Synthesize ``count`` pairs into the standard dataset layout.

    Writes input/NNNNNN.png, gt/NNNNNN.png, mask/NNNNNN.png,
    records/NNNNNN.json, and manifest.json. Output bytes depend only on the
    config and inputs, never on ``jobs``.
    """
    cfg.validate()
    if count < 0:
        raise ConfigError(f"count must be non-negative, got {count}")
    if jobs < 1:
        raise ConfigError(f"jobs must be at least 1, got {jobs}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pairs: list[dict] = []
    if count > 0:
        sources = _list_backgrounds(Path(background_dir), Path(depth_dir))
        templates = load_templates(flare_dir)
        indices = range(first_index, first_index + count)
        if jobs == 1:
            for i in indices:
                pairs.append(_synth_one(cfg, sources, templates, out_dir, i))
                if progress:
                    progress(i)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_synth_one, cfg, sources, templates, out_dir, i)
                           for i in indices]
                for i, fut in zip(indices, futures):
                    pairs.append(fut.result())
                    if progress:
                        progress(i)

    manifest = {
        "config": cfg.to_dict(),
        "first_index": first_index,
        "count": count,
        "pairs": pairs,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    manifest["manifest_path"] = str(manifest_path)
    return manifest
