"""Command-line front end.

Subcommands cover each pipeline stage (phantom, capture, reconstruct,
colorize, synthesize, evaluate) plus run-all for the full comparison.
Every override flag maps onto exactly one RunConfig key; --config loads a
YAML file first and flags win over it.

Exit codes: 0 success, 2 bad configuration or arguments, 3 I/O failure,
4 numerical or other unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fpm, harness, stack_io
from .config import RunConfig, load_config, save_config
from .errors import ConfigError
from .phantom import generate_phantom
from .transfer import cfpm_colorize, transfer_from_tile

__all__ = ["main", "build_parser"]


def _parse_na(text: str) -> float | None:
    if text.lower() in ("none", "null", "off"):
        return None
    return float(text)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _parse_wavelengths(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated values")
    return tuple(float(p) for p in parts)


# (flag, config key, type) for everything that is a plain value override
_OVERRIDES = [
    ("--rows", "rows", int),
    ("--cols", "cols", int),
    ("--pitch-mm", "pitch_mm", float),
    ("--height-mm", "height_mm", float),
    ("--na", "na", _parse_na),
    ("--wavelengths-um", "wavelengths_um", _parse_wavelengths),
    ("--dx-um", "dx_um", float),
    ("--hr-size", "hr_size", int),
    ("--lr-size", "lr_size", int),
    ("--upsample", "upsample", int),
    ("--iterations", "iterations", int),
    ("--noise-sigma", "noise_sigma", float),
    ("--seed", "seed", int),
    ("--samples", "samples", int),
    ("--channel", "channel", str),
    ("--outdir", "outdir", str),
    ("--neighborhood", "neighborhood", int),
    ("--dd-mode", "dd_mode", str),
    ("--stack-format", "stack_format", str),
    ("--tile-fraction", "tile_fraction", float),
    ("--include-tile", "include_tile", _parse_bool),
    ("--record-timing", "record_timing", _parse_bool),
    ("--jobs", "jobs", int),
    ("--phantom-preset", "phantom_preset", str),
]


# "flag not given" marker; None is a real value for --na
_UNSET = object()


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="YAML", help="configuration file")
    for flag, key, conv in _OVERRIDES:
        parser.add_argument(flag, dest=f"cfg_{key}", type=conv, default=_UNSET,
                            metavar=key.upper())


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for _, key, _ in _OVERRIDES:
        value = getattr(args, f"cfg_{key}", _UNSET)
        if value is not _UNSET:
            setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg.validate()


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_gray(path: str) -> np.ndarray:
    img = stack_io.load_image(path)
    if img.ndim == 3:
        raise ConfigError(f"{path} is a color image; expected single channel")
    return img


def _cmd_phantom(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = _outdir(cfg)
    for i, seed in enumerate(cfg.seeds()):
        ph = generate_phantom(seed, cfg.hr_size, cfg.phantom_preset)
        d = out / f"sample_{i:04d}"
        d.mkdir(parents=True, exist_ok=True)
        stack_io.save_png8(ph.rgb, d / "ground_truth.png")
        for ci, name in enumerate(harness.CHANNEL_NAMES):
            stack_io.save_tiff32(ph.amplitudes[ci], d / f"amp_{name}.tiff")
        stack_io.save_tiff32(ph.phase, d / "phase.tiff")
        (d / "phantom.json").write_text(json.dumps(
            {"seed": seed, "size": cfg.hr_size, "preset": cfg.phantom_preset},
            indent=2) + "\n")
    print(f"wrote {cfg.samples} phantom(s) under {out}")
    return 0


def _cmd_capture(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = _outdir(cfg)
    geom = cfg.geometry()
    for i, seed in enumerate(cfg.seeds()):
        ph = generate_phantom(seed, cfg.hr_size, cfg.phantom_preset)
        objects = ph.objects()
        d = out / f"sample_{i:04d}"
        for ci, name in enumerate(harness.CHANNEL_NAMES):
            stack = fpm.simulate_stack(
                objects[ci], geom, na=cfg.na, wavelength_um=cfg.wavelengths_um[ci],
                dx_um=cfg.dx_um, lr_size=cfg.lr_size, noise_sigma=cfg.noise_sigma,
                seed=seed * 1000 + 17 * ci if cfg.noise_sigma > 0 else None)
            stack_io.save_stack(stack, d / f"stack_{name}", fmt=cfg.stack_format)
        print(f"sample {i}: wrote 3 stacks of {geom.rows * geom.cols} frames")
    return 0


def _cmd_reconstruct(cfg: RunConfig, args: argparse.Namespace) -> int:
    stack = stack_io.load_stack(args.stack)
    recon = fpm.reconstruct(stack, iters=cfg.iterations)
    out = Path(args.out) if args.out else Path(args.stack) / "recon_amplitude.tiff"
    out.parent.mkdir(parents=True, exist_ok=True)
    stack_io.save_tiff32(np.clip(np.abs(recon), 0.0, 1.0), out)
    phase_path = out.with_name(out.stem + "_phase.tiff")
    stack_io.save_tiff32(np.angle(recon).astype(np.float64), phase_path)
    print(f"wrote {out} and {phase_path}")
    return 0


def _cmd_colorize(cfg: RunConfig, args: argparse.Namespace) -> int:
    donor = stack_io.load_image(args.donor)
    if donor.ndim != 3 or donor.shape[-1] != 3:
        raise ConfigError(f"{args.donor} must be a color image")
    acceptor = _load_gray(args.acceptor)
    if args.mode == "tile":
        result = transfer_from_tile(donor, acceptor, size=cfg.neighborhood,
                                    dd_mode=cfg.dd_mode)
    else:
        result = cfpm_colorize(donor, acceptor, size=cfg.neighborhood,
                               dd_mode=cfg.dd_mode)
    stack_io.save_png8(result, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_synthesize(cfg: RunConfig, args: argparse.Namespace) -> int:
    amps = np.stack([_load_gray(args.amp_r), _load_gray(args.amp_g),
                     _load_gray(args.amp_b)])
    rgb = harness.synthesize_rgb_conventional(amps)
    stack_io.save_png8(rgb, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    pred = stack_io.load_image(args.pred)
    ref = stack_io.load_image(args.ref)
    total = harness.rmse(pred, ref)
    record = {"rmse": total}
    if pred.ndim == 3 and pred.shape[-1] == 3:
        for ci, name in enumerate(harness.CHANNEL_NAMES):
            record[f"rmse_{name}"] = harness.rmse(pred[..., ci], ref[..., ci])
    line = " ".join(f"{k}={v:.6f}" for k, v in record.items())
    print(line)
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=2) + "\n")
    return 0


def _cmd_run_all(cfg: RunConfig, args: argparse.Namespace) -> int:
    out = _outdir(cfg)
    save_config(cfg, out / "config.yaml")
    artifacts = None if args.no_images else str(out)
    reports = harness.run_comparison(cfg, artifacts_dir=artifacts, progress=True)
    harness.write_report(reports, out / "metrics.json")
    if args.csv:
        harness.write_report_csv(reports, out / "metrics.csv")
    if args.plot:
        _write_plot(reports, out / "metrics.png")
    for pipeline in ("conventional", "cfpm", "tile"):
        try:
            print(f"mean rmse [{pipeline}]: {harness.mean_rmse(reports, pipeline):.4f}")
        except ValueError:
            pass
    print(f"wrote {out / 'metrics.json'}")
    return 0


def _write_plot(reports: list[harness.MetricsReport], path: Path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("--plot needs matplotlib; install the 'plots' extra") from exc
    pipelines = [p for p in ("conventional", "cfpm", "tile")
                 if any(r.pipeline == p and r.rmse is not None for r in reports)]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for p in pipelines:
        vals = [r.rmse for r in reports if r.pipeline == p and r.rmse is not None]
        ax.plot(range(len(vals)), vals, marker="o", markersize=3, label=p)
    ax.set_xlabel("sample")
    ax.set_ylabel("rmse")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfpm",
        description="simulate, reconstruct, colorize, and score synthetic "
                    "ptychographic captures of stained-slide phantoms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate phantom samples")
    _add_overrides(p)
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("capture", help="simulate capture stacks for each phantom")
    _add_overrides(p)
    p.set_defaults(func=_cmd_capture)

    p = sub.add_parser("reconstruct", help="reconstruct one saved capture stack")
    _add_overrides(p)
    p.add_argument("--stack", required=True, help="stack directory (with manifest.json)")
    p.add_argument("--out", help="output amplitude image (default: <stack>/recon_amplitude.tiff)")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("colorize", help="transfer color from a donor image onto an amplitude image")
    _add_overrides(p)
    p.add_argument("--donor", required=True, help="full-color donor image")
    p.add_argument("--acceptor", required=True, help="single-channel amplitude image")
    p.add_argument("--mode", choices=("fov", "tile"), default="fov",
                   help="fov: donor covers the same field at lower resolution; "
                        "tile: donor is a reference patch")
    p.add_argument("--out", default="colorized.png", help="output PNG")
    p.set_defaults(func=_cmd_colorize)

    p = sub.add_parser("synthesize", help="composite three amplitude images into display RGB")
    _add_overrides(p)
    p.add_argument("--amp-r", required=True, help="long-wavelength amplitude image")
    p.add_argument("--amp-g", required=True, help="mid-wavelength amplitude image")
    p.add_argument("--amp-b", required=True, help="short-wavelength amplitude image")
    p.add_argument("--out", default="synthesized.png", help="output PNG")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("evaluate", help="score one image against a reference")
    _add_overrides(p)
    p.add_argument("--pred", required=True, help="image under test")
    p.add_argument("--ref", required=True, help="reference image")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run-all", help="full comparison over all samples")
    _add_overrides(p)
    p.add_argument("--csv", action="store_true", help="also write metrics.csv")
    p.add_argument("--plot", action="store_true", help="also write a summary plot")
    p.add_argument("--no-images", action="store_true",
                   help="skip per-sample image artifacts, write metrics only")
    p.set_defaults(func=_cmd_run_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return int(args.func(cfg, args))
    except ConfigError as exc:
        print(f"cfpm: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cfpm: i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"cfpm: error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
