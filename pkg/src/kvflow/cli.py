"""Command-line surface.

Subcommands: solver-bench, invert, edit, analyze-layers, metrics. Every
command takes --config (JSON), --seed, and --out-dir; outputs are
byte-identical across runs with the same config and seed (reports embed
the config hash, never timestamps).

Exit codes: 0 success, 2 configuration/format error, 3 numeric error,
64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig, load_config, resolve_k
from .dit import init_weights
from .errors import ConfigError, FormatError, NumericError, ShapeError
from .metrics import RegionMask, video_psnr_ssim, video_to_frames
from .probe import guidance_responsiveness, select_vital_layers
from .tensor_io import export_pgm, load_tensor, save_tensor
from .workbench import (
    build_probe_set,
    run_edit_pipeline,
    run_inversion,
    solver_bench_rows,
)

USAGE = """\
usage: kvflow <command> [options]

commands:
  solver-bench    integration order study on an analytic field (CSV)
  invert          map a video to its noise anchor
  edit            full dual-path edit run (videos + metrics JSON)
  analyze-layers  layer responsiveness profile (CSV)
  metrics         PSNR/SSIM between two stored videos

common options: --config PATH (JSON), --seed INT, --out-dir DIR
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64


def _parser(cmd: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"kvflow {cmd}", add_help=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out-dir", default="out", help="output directory")
    return p


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: List[str], rows: List[List]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_solver_bench(argv: List[str]) -> None:
    args = _parser("solver-bench").parse_args(argv)
    cfg = load_config(args.config, args.seed)
    out = _out_dir(args)
    rows = solver_bench_rows(cfg)
    _write_csv(
        out / "solver_bench.csv",
        ["n", "order", "error", "slope"],
        [[r["n"], r["order"], r["error"], r["slope"]] for r in rows],
    )
    for order in ("euler", "rf2"):
        slope = next(r["slope"] for r in rows if r["order"] == order)
        print(f"{order}: fitted order {slope:.4f}")
    print(f"wrote {out / 'solver_bench.csv'}")


def _cmd_invert(argv: List[str]) -> None:
    p = _parser("invert")
    p.add_argument("--video", default=None, help="input video container (default: synthesize)")
    args = p.parse_args(argv)
    cfg = load_config(args.config, args.seed)
    out = _out_dir(args)
    video = load_tensor(args.video) if args.video else None
    source, anchor, _ = run_inversion(cfg, video)
    save_tensor(out / "source.cft", source)
    save_tensor(out / "anchor.cft", anchor)
    print(f"wrote {out / 'anchor.cft'} (anchor norm {float(np.linalg.norm(anchor)):.4f})")


def _cmd_edit(argv: List[str]) -> None:
    p = _parser("edit")
    p.add_argument("--video", default=None, help="input video container (default: synthesize)")
    p.add_argument("--dump-pgm", action="store_true", help="also dump channel-0 PGM frames")
    args = p.parse_args(argv)
    cfg = load_config(args.config, args.seed)
    out = _out_dir(args)
    video = load_tensor(args.video) if args.video else None
    result = run_edit_pipeline(cfg, video)
    save_tensor(out / "source.cft", result.source)
    save_tensor(out / "anchor.cft", result.anchor)
    save_tensor(out / "recon.cft", result.recon)
    save_tensor(out / "edited.cft", result.edited)
    _write_json(out / "metrics.json", result.report)
    if result.gr_profile is not None:
        _write_gr_csv(out / "gr_profile.csv", result.gr_profile)
    if args.dump_pgm:
        frame_dir = out / "frames"
        frame_dir.mkdir(exist_ok=True)
        for name, vid in (("source", result.source), ("recon", result.recon), ("edited", result.edited)):
            frames = video_to_frames(vid, ref=result.source)
            channels = vid.shape[3]
            for f in range(vid.shape[0]):
                export_pgm(frames[f * channels], frame_dir / f"{name}_f{f}.pgm")
    print(f"vital layers: {list(result.vital_layers)}")
    print(f"recon vs edited max-abs: {result.report['recon_vs_edited_max_abs']:.6g}")
    print(f"wrote {out / 'metrics.json'}")


def _write_gr_csv(path: Path, profile) -> None:
    rows = [
        [l, profile.raw[l], profile.normalized[l]]
        for l in range(profile.num_layers)
    ]
    _write_csv(path, ["layer_index", "gr_raw", "gr_normalized"], rows)


def _cmd_analyze_layers(argv: List[str]) -> None:
    args = _parser("analyze-layers").parse_args(argv)
    cfg = load_config(args.config, args.seed)
    out = _out_dir(args)
    weights_cfg = cfg.model.to_dit_config(cfg.video)
    weights = init_weights(weights_cfg, cfg.seed)
    profile = guidance_responsiveness(weights, build_probe_set(cfg))
    _write_gr_csv(out / "gr_profile.csv", profile)
    k = resolve_k(cfg.policy, weights_cfg.num_layers)
    selected = select_vital_layers(profile, k)
    print(f"top-{k} layers: {list(selected)}")
    print(f"wrote {out / 'gr_profile.csv'}")


def _cmd_metrics(argv: List[str]) -> None:
    p = _parser("metrics")
    p.add_argument("--video-a", required=True, help="reference video container")
    p.add_argument("--video-b", required=True, help="comparison video container")
    p.add_argument("--mask", default=None, help="optional mask container (nonzero = included)")
    args = p.parse_args(argv)
    out = _out_dir(args)
    a = load_tensor(args.video_a)
    b = load_tensor(args.video_b)
    mask = None
    if args.mask:
        m = load_tensor(args.mask)
        if m.ndim != 2:
            raise ConfigError(f"mask must be 2-D, got shape {m.shape}")
        mask = RegionMask(m != 0)
    p_db, s = video_psnr_ssim(a, b, mask)
    payload = {"psnr": p_db, "ssim": s}
    _write_json(out / "metrics.json", payload)
    print(json.dumps(payload, sort_keys=True))


_COMMANDS = {
    "solver-bench": _cmd_solver_bench,
    "invert": _cmd_invert,
    "edit": _cmd_edit,
    "analyze-layers": _cmd_analyze_layers,
    "metrics": _cmd_metrics,
}


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("-h", "--help", "help"):
        print(USAGE)
        return EXIT_OK
    if not argv or argv[0] not in _COMMANDS:
        sys.stderr.write(USAGE)
        return EXIT_USAGE
    try:
        _COMMANDS[argv[0]](argv[1:])
    except SystemExit as e:  # argparse flag errors
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    except (ConfigError, ShapeError, FormatError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_CONFIG
    except NumericError as e:
        sys.stderr.write(f"numeric error: {e}\n")
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(cli_dispatch())
