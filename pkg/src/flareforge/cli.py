"""Command-line entry point: synth, mask, eval, and inspect workflows.

Values are resolved as flags > JSON config file > built-in defaults, and
the effective configuration is echoed into every output (manifest, record,
report). Failures print a single machine-readable JSON object on stderr:
{"error_kind": ..., "message": ...}.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, afm, metrics, spe, synth
from .augment import SeededRng, derive_stream_index, sample_affine
from .errors import ConfigError, FlareforgeError
from .imgcore import load_mask, load_pfm, load_png, to_luma_bt601, write_mask

ENV_SEED = "FLAREFORGE_SEED"


class _Parser(argparse.ArgumentParser):
    # keep the JSON-on-stderr contract even for argparse usage errors
    def error(self, message):
        emit_error("UsageError", message)
        raise SystemExit(2)


def emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error_kind": kind, "message": message}), file=sys.stderr)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flareforge",
                     description="Deterministic multi-flare synthesis, "
                                 "adaptive-focus masking, and restoration metrics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="synthesize a flare dataset")
    p_synth.add_argument("--config", help="JSON config file")
    p_synth.add_argument("--backgrounds", required=True, help="directory of background PNGs")
    p_synth.add_argument("--depths", required=True,
                         help="directory of <stem>.pfm depth maps")
    p_synth.add_argument("--flares", required=True,
                         help="directory of flare templates (+ optional <stem>_ls.png)")
    p_synth.add_argument("--out", required=True, help="output dataset directory")
    p_synth.add_argument("--count", type=int, required=True, help="number of pairs")
    p_synth.add_argument("--seed", type=int, help=f"master seed (fallback: ${ENV_SEED})")
    p_synth.add_argument("--fov", type=float, help="fixed horizontal field of view, degrees")
    p_synth.add_argument("--fov-random", nargs="?", const="20,40,60,80,100", default=None,
                         metavar="DEG,DEG,...",
                         help="sample the fov per pair from this comma-separated list")
    p_synth.add_argument("--flare-min", type=int, help="minimum flares per image")
    p_synth.add_argument("--flare-max", type=int, help="maximum flares per image")
    p_synth.add_argument("--gamma-min", type=float, help="lower end of the gamma range")
    p_synth.add_argument("--gamma-max", type=float, help="upper end of the gamma range")
    p_synth.add_argument("--compose-space", choices=["linear", "encoded"],
                         help="space in which flares are added (default linear)")
    p_synth.add_argument("--gt-mode",
                         choices=["auto", "background_only", "background_plus_light_source"],
                         help="ground-truth composition mode (default auto)")
    p_synth.add_argument("--tau-ls", type=float, help="light-source luma threshold")
    p_synth.add_argument("--max-scale", type=float, help="cap on brightness scales")
    p_synth.add_argument("--depth-inverse", action="store_true", default=None,
                         help="treat depth files as inverse depth (disparity)")
    p_synth.add_argument("--jobs", type=int, default=1, help="worker threads")
    p_synth.add_argument("--first-index", type=int, default=0,
                         help="index of the first generated pair")
    p_synth.add_argument("-q", "--quiet", action="store_true",
                         help="suppress per-pair progress lines")

    p_mask = sub.add_parser("mask", help="generate an adaptive-focus mask for one image")
    p_mask.add_argument("--input", required=True, help="input PNG")
    p_mask.add_argument("--out", required=True, help="output mask PNG")
    p_mask.add_argument("--strategy", choices=["fixed", "affine_of_mean", "percentile"],
                        help="threshold strategy (inferred from --tau/--w/--b/--p if omitted)")
    p_mask.add_argument("--tau", type=float, help="fixed threshold in (0, 1)")
    p_mask.add_argument("--w", type=float, help="weight on mean luma (affine_of_mean)")
    p_mask.add_argument("--b", type=float, help="bias term (affine_of_mean)")
    p_mask.add_argument("--p", type=float, help="percentile in [0, 100]")

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True, help="directory of predicted PNGs")
    p_eval.add_argument("--gt", required=True, help="directory of ground-truth PNGs")
    p_eval.add_argument("--glare-masks", help="directory of glare region masks (G-PSNR)")
    p_eval.add_argument("--streak-masks", help="directory of streak region masks (S-PSNR)")
    p_eval.add_argument("--flare-masks",
                        help="directory of combined flare masks (flare-region PSNR)")
    p_eval.add_argument("--out", help="write the JSON report here (default: stdout only)")

    p_inspect = sub.add_parser("inspect",
                               help="sample one flare placement and print its geometry")
    p_inspect.add_argument("--config", help="JSON config file")
    p_inspect.add_argument("--background", required=True, help="background PNG")
    p_inspect.add_argument("--depth", required=True, help="depth PFM")
    p_inspect.add_argument("--flare", required=True, help="flare template PNG")
    p_inspect.add_argument("--fov", type=float, help="horizontal field of view, degrees")
    p_inspect.add_argument("--seed", type=int, help=f"master seed (fallback: ${ENV_SEED})")
    p_inspect.add_argument("--tau-ls", type=float, help="light-source luma threshold")
    p_inspect.add_argument("--depth-inverse", action="store_true", default=None)

    return parser


def _load_config_file(path) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise IOError(f"{p}: no such config file")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return data


def _resolve_seed(flag_seed, config: dict) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"${ENV_SEED} must be an integer, got {env!r}") from None
    return int(config.get("master_seed", 0))


def _synth_config(args, config: dict) -> synth.SynthConfig:
    merged = dict(config)
    merged["master_seed"] = _resolve_seed(args.seed, config)
    if args.fov is not None and args.fov_random is not None:
        raise ConfigError("--fov and --fov-random are mutually exclusive")
    if args.fov is not None:
        merged["fov_mode"] = synth.FOV_FIXED
        merged["fov_degrees"] = [args.fov]
    elif args.fov_random is not None:
        merged["fov_mode"] = synth.FOV_RANDOM_CHOICE
        try:
            merged["fov_degrees"] = [float(v) for v in args.fov_random.split(",") if v]
        except ValueError:
            raise ConfigError(f"--fov-random expects numbers, got {args.fov_random!r}") from None
    lo, hi = merged.get("flare_count", (1, 3))
    if args.flare_min is not None:
        lo = args.flare_min
    if args.flare_max is not None:
        hi = args.flare_max
    merged["flare_count"] = [lo, hi]
    if args.gamma_min is not None or args.gamma_max is not None:
        base = merged.get("gamma_range") or [1.8, 2.2]
        glo = args.gamma_min if args.gamma_min is not None else base[0]
        ghi = args.gamma_max if args.gamma_max is not None else base[1]
        merged["gamma_range"] = [glo, ghi]
    if args.compose_space is not None:
        merged["compose_space"] = args.compose_space
    if args.gt_mode is not None:
        merged["gt_mode"] = args.gt_mode
    if args.tau_ls is not None:
        merged["tau_ls"] = args.tau_ls
    if args.max_scale is not None:
        merged["max_scale"] = args.max_scale
    if args.depth_inverse is not None:
        merged["depth_inverse"] = True
    return synth.SynthConfig.from_dict(merged)


def cmd_synth(args) -> int:
    cfg = _synth_config(args, _load_config_file(args.config))
    progress = None if args.quiet else (lambda i: print(f"synthesized pair {i:06d}"))
    manifest = synth.run_dataset(
        cfg, args.backgrounds, args.depths, args.flares, args.out,
        count=args.count, jobs=args.jobs, first_index=args.first_index,
        progress=progress,
    )
    print(f"wrote {manifest['count']} pairs")
    print(manifest["manifest_path"])
    return 0


def _mask_strategy(args) -> afm.ThresholdStrategy:
    strategy = args.strategy
    if strategy is None:
        given = [name for name, v in
                 (("fixed", args.tau), ("affine_of_mean", args.w), ("percentile", args.p))
                 if v is not None]
        if args.b is not None and "affine_of_mean" not in given:
            given.append("affine_of_mean")
        if len(set(given)) != 1:
            raise ConfigError("cannot infer strategy; pass --strategy or exactly one "
                              "of --tau / --w,--b / --p")
        strategy = given[0]
    if strategy == "fixed":
        if args.tau is None:
            raise ConfigError("fixed strategy requires --tau")
        return afm.ThresholdStrategy.fixed(args.tau)
    if strategy == "affine_of_mean":
        if args.w is None or args.b is None:
            raise ConfigError("affine_of_mean strategy requires --w and --b")
        return afm.ThresholdStrategy.affine_of_mean(args.w, args.b)
    if args.p is None:
        raise ConfigError("percentile strategy requires --p")
    return afm.ThresholdStrategy.percentile(args.p)


def cmd_mask(args) -> int:
    strategy = _mask_strategy(args)
    img = load_png(args.input)
    y = to_luma_bt601(img)
    tau = afm.compute_threshold(y, strategy)
    result = afm.generate_mask(y, tau)
    write_mask(result.mask, args.out)
    print(json.dumps({
        "strategy": strategy.kind,
        "tau": result.tau,
        "coverage": result.coverage,
        "out": str(args.out),
    }, indent=2))
    return 0


def cmd_eval(args) -> int:
    report = metrics.evaluate_dirs(
        args.pred, args.gt,
        glare_mask_dir=args.glare_masks,
        streak_mask_dir=args.streak_masks,
        flare_mask_dir=args.flare_masks,
    )
    text = report.to_json()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text)
    agg = report.aggregate
    label = "flare-region PSNR" if "flare_psnr" in agg else None

    def fmt(v):
        return "inf" if v is not None and math.isinf(v) else \
            ("n/a" if v is None else f"{v:.4f}")

    summary = [f"count={agg.get('count', 0)}",
               f"psnr={fmt(agg.get('psnr'))}", f"ssim={fmt(agg.get('ssim'))}"]
    if "g_psnr" in agg:
        summary.append(f"g_psnr={fmt(agg.get('g_psnr'))}")
    if "s_psnr" in agg:
        summary.append(f"s_psnr={fmt(agg.get('s_psnr'))}")
    if label:
        summary.append(f"{label}={fmt(agg.get('flare_psnr'))}")
    print("aggregate: " + " ".join(summary), file=sys.stderr)
    return 0


def cmd_inspect(args) -> int:
    config = _load_config_file(args.config)
    if args.tau_ls is not None:
        config["tau_ls"] = args.tau_ls
    if args.depth_inverse is not None:
        config["depth_inverse"] = True
    if args.fov is not None:
        config["fov_mode"] = synth.FOV_FIXED
        config["fov_degrees"] = [args.fov]
    config["master_seed"] = _resolve_seed(args.seed, config)
    cfg = synth.SynthConfig.from_dict(config)

    bg = load_png(args.background)
    depth = load_pfm(args.depth, invert=cfg.depth_inverse, epsilon=cfg.depth_epsilon)
    if (bg.height, bg.width) != (depth.height, depth.width):
        raise ConfigError("background and depth map dimensions differ")
    flare_path = Path(args.flare)
    ls_path = flare_path.with_name(flare_path.stem + "_ls.png")
    ls = load_mask(ls_path) if ls_path.is_file() else None
    flare = load_png(flare_path)

    if cfg.fov_mode == synth.FOV_RANDOM_CHOICE:
        pick = SeededRng(cfg.master_seed, derive_stream_index("pair", 0)).generator()
        fov_degrees = float(cfg.fov_degrees[int(pick.integers(0, len(cfg.fov_degrees)))])
    else:
        fov_degrees = float(cfg.fov_degrees[0])

    ranges = cfg.affine.to_ranges(bg.width, bg.height)
    params = sample_affine(SeededRng(cfg.master_seed, derive_stream_index("flare", 0, 0)),
                           ranges)
    warped = synth.apply_affine(flare, params, bg.width, bg.height)
    warped_ls = synth.apply_affine_mask(ls, params, bg.width, bg.height) if ls else None
    region = spe.extract_light_source(warped, warped_ls, cfg.tau_ls)
    d = spe.mean_depth(depth, region)
    r = spe.mean_radius(region, bg.width, bg.height)
    theta = spe.incident_angle(r, bg.width, math.radians(fov_degrees))
    # a single flare is its own reference depth, so only the cosine remains
    scale = min(math.cos(theta), cfg.max_scale)

    print(json.dumps({
        "d_i": d,
        "r_i": r,
        "theta_deg": math.degrees(theta),
        "scale_s": scale,
        "light_source_pixels": region.count,
        "provenance": region.source,
        "fov_degrees": fov_degrees,
        "affine": params.to_dict(),
    }, indent=2))
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "mask": cmd_mask,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FlareforgeError as exc:
        emit_error(type(exc).__name__, str(exc))
        return 1
    except OSError as exc:
        emit_error("IOError", str(exc))
        return 1
    except ValueError as exc:
        emit_error("ValueError", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
