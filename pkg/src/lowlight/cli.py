"""Command-line interface.

Subcommands: train, enhance, video, synth, bench, eval. Every command
prints line-delimited JSON records to stdout (one final summary record
embedding its resolved configuration) so reports can be assembled by
scripts. Exit codes: 0 success, 1 user/input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import statistics
import sys
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .curve import CurveConfig
from .data import DatasetSpec, list_images, synthesize_dark_pairs
from .errors import LowlightError
from .factor import (FactorNet, FactorNetConfig, count_macs, count_params,
                     init_factor_net, load_checkpoint, save_checkpoint)
from .imageio import load_image, save_image
from .losses import LossConfig
from .metrics import mean_brightness, mse, psnr, ssim
from .pipeline import enhance_image, factor_to_image
from .semantic import SemanticGuide
from .train import TrainConfig, train

logger = logging.getLogger(__name__)

FRAME_PATTERN = re.compile(r"^frame_(\d{6})\.png$")


class UserInputError(LowlightError):
    """Bad flags, paths, or inputs: the user can fix these."""


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def _parse_size(text: str) -> tuple[int, int]:
    """'512' -> (512, 512); '1200x900' -> (height 900, width 1200)."""
    if "x" in text.lower():
        w_str, h_str = text.lower().split("x", 1)
        try:
            return int(h_str), int(w_str)
        except ValueError:
            raise UserInputError(f"invalid size {text!r}; use N or WIDTHxHEIGHT")
    try:
        side = int(text)
    except ValueError:
        raise UserInputError(f"invalid size {text!r}; use N or WIDTHxHEIGHT")
    return side, side


def _loss_config_from_args(args) -> LossConfig:
    return LossConfig(
        region_size=args.A,
        alpha=args.alpha,
        exposure_level=args.E,
        exposure_patch=args.exposure_patch,
        lambda_spa=args.lambda_spa,
        lambda_rgb=args.lambda_rgb,
        lambda_bri=args.lambda_bri,
        lambda_tv=args.lambda_tv,
        lambda_sem=args.lambda_sem,
        tv_on_factor=args.tv_on_factor,
    )


def cmd_train(args) -> int:
    data = DatasetSpec(root=Path(args.data), target_size=_parse_size(args.size),
                       shuffle_seed=args.seed)
    sem_enabled = not args.no_sem
    config = TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        clip_norm=args.clip,
        width=args.width,
        seed=args.seed,
        sem_enabled=sem_enabled,
        checkpoint_every=args.checkpoint_every,
        curve=CurveConfig(order=args.order, steps=args.steps),
        losses=_loss_config_from_args(args),
    )
    guide = None
    if sem_enabled:
        guide = SemanticGuide.create(num_classes=args.num_classes,
                                     backbone_path=args.backbone, seed=args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    net, history = train(config, data, guide=guide, checkpoint_dir=out_dir)

    checkpoint = out_dir / "checkpoint.npz"
    save_checkpoint(net, checkpoint, extra={"epochs": config.epochs})
    history_path = out_dir / "history.jsonl"
    history.save_jsonl(history_path)

    last = history.records[-1]
    _emit({
        "command": "train",
        "checkpoint": str(checkpoint),
        "history": str(history_path),
        "epochs": len(history),
        "final_total_loss": last.total,
        "final_losses": {k: getattr(last, k) for k in ("spa", "rgb", "bri", "tv", "sem")},
        "config": _resolved_config(args),
    })
    return 0


def _load_net(args) -> FactorNet:
    if not Path(args.checkpoint).is_file():
        raise UserInputError(f"checkpoint not found: {args.checkpoint}")
    return load_checkpoint(args.checkpoint)


def cmd_enhance(args) -> int:
    net = _load_net(args)
    curve = CurveConfig(order=args.order, steps=args.steps)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for input_path in args.inputs:
        input_path = Path(input_path)
        if not input_path.is_file():
            raise UserInputError(f"input image not found: {input_path}")
        img = load_image(input_path)
        enhanced, factor = enhance_image(net, img, curve, args.downsample)
        out_path = out_dir / f"{input_path.stem}.png"
        save_image(enhanced, out_path)
        written.append(str(out_path))
        if args.save_factor:
            factor_path = out_dir / f"{input_path.stem}_factor.png"
            save_image(factor_to_image(factor), factor_path)
            written.append(str(factor_path))
    _emit({
        "command": "enhance",
        "inputs": len(args.inputs),
        "written": written,
        "config": _resolved_config(args),
    })
    return 0


def _scan_frames(frames_dir: Path) -> list[tuple[int, Path]]:
    frames = []
    for path in sorted(frames_dir.iterdir()):
        match = FRAME_PATTERN.match(path.name)
        if match:
            frames.append((int(match.group(1)), path))
    if not frames:
        raise UserInputError(
            f"no frames matching frame_NNNNNN.png found in {frames_dir}"
        )
    numbers = [n for n, _ in frames]
    expected = set(range(min(numbers), max(numbers) + 1))
    gaps = sorted(expected - set(numbers))
    if gaps:
        logger.warning("frame numbering has %d gap(s), e.g. frame_%06d.png; continuing",
                       len(gaps), gaps[0])
    return frames


def cmd_video(args) -> int:
    net = _load_net(args)
    curve = CurveConfig(order=args.order, steps=args.steps)
    frames_dir = Path(args.frames)
    if not frames_dir.is_dir():
        raise UserInputError(f"frames directory not found: {frames_dir}")
    frames = _scan_frames(frames_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # the network call is serialized so outputs are bit-identical for any
    # worker count; workers overlap image decode/encode with inference
    net_lock = threading.Lock()
    failures: list[str] = []
    latencies: list[float] = []
    stats_lock = threading.Lock()

    def process(item):
        number, path = item
        t0 = time.perf_counter()
        try:
            img = load_image(path)
        except Exception as exc:
            with stats_lock:
                failures.append(f"{path.name}: {exc}")
            return
        with net_lock:
            enhanced, _ = enhance_image(net, img, curve, args.downsample)
        save_image(enhanced, out_dir / path.name)
        with stats_lock:
            latencies.append(time.perf_counter() - t0)

    t_start = time.perf_counter()
    if args.workers <= 1:
        for item in frames:
            process(item)
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(process, frames))
    elapsed = time.perf_counter() - t_start

    if failures:
        raise UserInputError("unreadable frame(s): " + "; ".join(sorted(failures)))

    _emit({
        "command": "video",
        "frames": len(frames),
        "workers": args.workers,
        "frames_per_second": len(frames) / elapsed if elapsed > 0 else None,
        "mean_latency_seconds": statistics.fmean(latencies) if latencies else None,
        "out": str(out_dir),
        "config": _resolved_config(args),
    })
    return 0


def cmd_synth(args) -> int:
    pairs = synthesize_dark_pairs(args.src, args.out, gamma=args.gamma)
    _emit({
        "command": "synth",
        "pairs": len(pairs),
        "out": str(Path(args.out)),
        "config": _resolved_config(args),
    })
    return 0


def cmd_bench(args) -> int:
    if args.checkpoint:
        net = load_checkpoint(args.checkpoint)
    else:
        net = init_factor_net(FactorNetConfig(width=args.width), seed=0)
    h, w = _parse_size(args.size)
    params = count_params(net)
    macs = count_macs(net, h, w)
    x = torch.rand(1, 3, h, w, generator=torch.Generator().manual_seed(0))
    with torch.no_grad():
        for _ in range(args.warmup):
            net(x)
        times = []
        for _ in range(args.runs):
            t0 = time.perf_counter()
            net(x)
            times.append(time.perf_counter() - t0)
    _emit({
        "command": "bench",
        "height": h,
        "width": w,
        "params": params,
        "params_millions": round(params / 1e6, 3),
        "macs": macs,
        "macs_per_pixel": macs // (h * w),
        "runs": args.runs,
        "median_seconds_per_image": statistics.median(times),
        "mean_seconds_per_image": statistics.fmean(times),
        "images_per_second": 1.0 / statistics.median(times),
        "config": _resolved_config(args),
    })
    return 0


def cmd_eval(args) -> int:
    enhanced_dir = Path(args.enhanced)
    reference_dir = Path(args.reference)
    for d in (enhanced_dir, reference_dir):
        if not d.is_dir():
            raise UserInputError(f"directory not found: {d}")
    external = {}
    if args.merge_external:
        with open(args.merge_external, encoding="utf-8") as fh:
            external = json.load(fh)

    names = sorted(p.name for p in list_images(enhanced_dir))
    if not names:
        raise UserInputError(f"no images found in {enhanced_dir}")
    rows = []
    for name in names:
        ref_path = reference_dir / name
        if not ref_path.is_file():
            raise UserInputError(f"missing reference for {name}: {ref_path}")
        a = load_image(enhanced_dir / name)
        b = load_image(ref_path)
        row = {
            "record": "pair",
            "name": name,
            "psnr": psnr(a, b),
            "ssim": ssim(a, b),
            "mse": mse(a, b),
            "mean_brightness": mean_brightness(a),
        }
        if name in external:
            row["external"] = external[name]
        rows.append(row)
        _emit(row)

    summary = {
        "command": "eval",
        "record": "summary",
        "pairs": len(rows),
        "mean_psnr": statistics.fmean(r["psnr"] for r in rows),
        "mean_ssim": statistics.fmean(r["ssim"] for r in rows),
        "mean_mse": statistics.fmean(r["mse"] for r in rows),
        "config": _resolved_config(args),
    }
    if args.report:
        report = Path(args.report)
        report.parent.mkdir(parents=True, exist_ok=True)
        with open(report, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
        summary["report"] = str(report)
    _emit(summary)
    return 0


def _resolved_config(args) -> dict:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    resolved["version"] = __version__
    return resolved


def _add_curve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=8, help="curve recurrence steps")
    p.add_argument("--order", type=int, default=2, help="curve polynomial order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowlight",
        description="Zero-shot low-light image/video enhancement toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a factor network on a directory of images")
    p.add_argument("--data", required=True, help="directory of training images")
    p.add_argument("--out", default="runs/train", help="output directory")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=6)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--clip", type=float, default=0.1, help="gradient norm clip")
    p.add_argument("--size", default="512", help="training resolution (N or WIDTHxHEIGHT)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=32, help="factor network width")
    p.add_argument("--no-sem", action="store_true", help="disable the semantic loss path")
    p.add_argument("--backbone", default=None,
                   help="backbone weight archive (.npz); random fallback when omitted")
    p.add_argument("--num-classes", type=int, default=21)
    p.add_argument("--A", type=int, default=4, help="spatial loss region size")
    p.add_argument("--E", type=float, default=0.60, help="exposure target level")
    p.add_argument("--alpha", type=float, default=0.5, help="diagonal neighbor weight")
    p.add_argument("--exposure-patch", type=int, default=16)
    p.add_argument("--lambda-spa", type=float, default=1.0)
    p.add_argument("--lambda-rgb", type=float, default=1.0)
    p.add_argument("--lambda-bri", type=float, default=1.0)
    p.add_argument("--lambda-tv", type=float, default=1.0)
    p.add_argument("--lambda-sem", type=float, default=0.1)
    p.add_argument("--tv-on-factor", action="store_true",
                   help="apply the smoothness loss to the factor map")
    p.add_argument("--checkpoint-every", type=int, default=None)
    _add_curve_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("enhance", help="enhance one or more images")
    p.add_argument("inputs", nargs="+", help="input image files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--save-factor", action="store_true",
                   help="also write factor maps as grayscale-per-channel images")
    p.add_argument("--downsample", type=int, default=None,
                   help="estimate factors at 1/N resolution")
    _add_curve_flags(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("video", help="enhance a frame_NNNNNN.png frame directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--frames", required=True, help="input frame directory")
    p.add_argument("--out", required=True, help="output frame directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--downsample", type=int, default=None)
    _add_curve_flags(p)
    p.set_defaults(func=cmd_video)

    p = sub.add_parser("synth", help="synthesize a paired dark/ground-truth dataset")
    p.add_argument("--src", required=True, help="source image directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gamma", type=float, default=3.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="report parameters, MACs, and inference time")
    p.add_argument("--size", default="1200x900")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--checkpoint", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="PSNR/SSIM/MSE over (enhanced, reference) pairs")
    p.add_argument("--enhanced", required=True, help="directory of enhanced images")
    p.add_argument("--reference", required=True,
                   help="directory of same-named reference images")
    p.add_argument("--merge-external", default=None,
                   help="JSON file of externally computed per-image scores to attach")
    p.add_argument("--report", default=None, help="also write rows to this JSONL file")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the user-error code
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (UserInputError, LowlightError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
