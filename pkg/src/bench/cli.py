"""Command-line interface: encode, decode, train, sweep, plot, make-synthetic.

Usage:
    spic make-synthetic data/synthetic --n-train 64 --n-val 16
    spic encode image.png -o image.spic --quality 26
    spic decode image.spic -o recon.png
    spic train data/synthetic --steps 2000
    spic sweep data/synthetic --out runs/sweep_0
    spic plot runs/sweep_0/results.csv

Every verb accepts ``--config PATH`` (a KEY=value file read instead of .env).
Exit codes: 0 when all requested outputs were written, 1 on failure,
2 on argument errors, 130 when interrupted.
"""

import argparse
import sys
from pathlib import Path

from loguru import logger
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from src.config.settings import reload_settings, settings
from src.core.errors import SpicError
from src.core.io import load_image, load_labels, save_image
from src.utils.logger import log_execution_context, log_rate_report, setup_logger

console = Console()
err_console = Console(stderr=True)


# ============================================================
# Argument parsing
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spic",
        description="Semantic image coding: segmentation map + coarse image, diffusion decoder",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", type=Path, default=None, help="KEY=value settings file (default: .env)")
    parser.add_argument("--log-level", default=None, help=f"Log level (default: {settings.log_level})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="Encode an image into a .spic bitstream")
    p.add_argument("image", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--quality", type=int, default=None, help="Coarse codec quality 1..51 (higher is better)")
    p.add_argument("--factor", type=int, default=None, help="Downscale factor")
    p.add_argument("--ssm-codec", type=int, default=None, help="SSM codec id (0 reference, 1 FLIF)")
    p.add_argument("--coarse-codec", type=int, default=None, help="Coarse codec id (0 reference, 1 BPG)")
    p.add_argument("--segmenter", choices=["prototype", "ground_truth"], default=None)
    p.add_argument("--labels", type=Path, default=None, help="Label raster (ground_truth segmenter)")
    p.add_argument("--n-classes", type=int, default=None)

    p = sub.add_parser("decode", help="Reconstruct an image from a .spic bitstream")
    p.add_argument("bitstream", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--init-mode", choices=["coarse", "coarse_noised", "noise"], default=None)
    p.add_argument("--factor", type=int, default=None)
    p.add_argument("--bilinear", action="store_true", help="Upscale the coarse image instead of sampling")
    p.add_argument("--coarse-output", type=Path, default=None, help="Also write the decoded coarse image")

    p = sub.add_parser("train", help="Train the diffusion decoder on a dataset")
    p.add_argument("data", type=Path)
    p.add_argument("--layout", choices=["auto", "synthetic", "cityscapes"], default="auto")
    p.add_argument("--split", default="train")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--resize", type=int, nargs=2, metavar=("H", "W"), default=None)

    p = sub.add_parser("sweep", help="Rate-distortion sweep over a dataset split")
    p.add_argument("data", type=Path)
    p.add_argument("--layout", choices=["auto", "synthetic", "cityscapes"], default="auto")
    p.add_argument("--split", default=None)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--no-diffusion", action="store_true", help="Skip the diffusion decoder")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--quality", type=int, nargs="+", default=None, help="Coarse quality ladder")
    p.add_argument("--baseline-quality", type=int, nargs="+", default=None)
    p.add_argument("--steps", type=int, default=None, help="Sampling steps")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--resize", type=int, nargs=2, metavar=("H", "W"), default=None)
    p.add_argument("--plots", action="store_true", help="Also write the charts next to the CSV")

    p = sub.add_parser("plot", help="Write mIoU/FID vs BPP charts from a sweep CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, default=None, help="Output directory (default: next to the CSV)")

    p = sub.add_parser("make-synthetic", help="Write the synthetic-shapes corpus")
    p.add_argument("out", type=Path, nargs="?", default=None)
    p.add_argument("--n-train", type=int, default=64)
    p.add_argument("--n-val", type=int, default=16)
    p.add_argument("--seed", type=int, default=None)

    return parser


# ============================================================
# Verbs
# ============================================================

def _pick(value, default):
    return default if value is None else value


def cmd_encode(args: argparse.Namespace) -> int:
    from src.encoder.bitstream import write_spic
    from src.encoder.pipeline import EncodeOptions, encode_image
    from src.encoder.segmenter import build_segmenter

    options = EncodeOptions.from_settings(
        quality=args.quality,
        factor=args.factor,
        ssm_codec_id=args.ssm_codec,
        coarse_codec_id=args.coarse_codec,
    )
    x = load_image(args.image, options.factor)
    kind = _pick(args.segmenter, settings.segmenter)
    n_classes = _pick(args.n_classes, settings.n_classes)
    pairs = []
    if kind == "ground_truth":
        if args.labels is None:
            raise SpicError("--labels is required with the ground_truth segmenter")
        pairs = [(x, load_labels(args.labels, n_classes))]
    segmenter = build_segmenter(kind, n_classes, pairs)

    with log_execution_context(f"encode {args.image.name}"):
        encoded = encode_image(x, segmenter, options)
        write_spic(encoded.bitstream, args.output)
    log_rate_report(args.image.stem, encoded.rate)
    console.print_json(
        data={
            "output": str(args.output),
            "width": x.width,
            "height": x.height,
            "n_classes": encoded.segmentation.n_classes,
            "quality": options.quality,
            "bytes": len(encoded.bitstream),
            **encoded.rate.as_dict(),
        }
    )
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    from src.encoder.bitstream import read_spic
    from src.encoder.pipeline import decode_bitstream
    from src.encoder.scaling import upscale_coarse

    factor = _pick(args.factor, settings.downscale_factor)
    with log_execution_context(f"decode {args.bitstream.name}"):
        decoded = decode_bitstream(read_spic(args.bitstream), factor)
        if args.bilinear:
            x_hat = upscale_coarse(decoded.coarse, factor)
        else:
            from src.diffusion.checkpoint import load_checkpoint
            from src.diffusion.reconstruct import reconstruct

            checkpoint = _pick(args.checkpoint, settings.resolved_checkpoint)
            diffusion, _ = load_checkpoint(checkpoint, settings.device)
            cfg = settings.sampler.model_copy(
                update={
                    k: v
                    for k, v in {"steps": args.steps, "seed": args.seed, "init_mode": args.init_mode}.items()
                    if v is not None
                }
            )
            x_hat = reconstruct(decoded, diffusion, cfg)
        save_image(x_hat, args.output)
        if args.coarse_output is not None:
            save_image(decoded.coarse, args.coarse_output)
    log_rate_report(args.bitstream.stem, decoded.rate)
    console.print_json(
        data={
            "output": str(args.output),
            "width": decoded.header.width,
            "height": decoded.header.height,
            "quality": decoded.header.coarse_quality,
            "method": "coarse_bilinear" if args.bilinear else "spic",
            **decoded.rate.as_dict(),
        }
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    from src.data.loader import ingest
    from src.diffusion.checkpoint import build_diffusion
    from src.diffusion.trainer import SemanticSRDataset, Trainer

    factor = settings.downscale_factor
    cfg = settings.train.model_copy(
        update={k: v for k, v in {"steps": args.steps, "batch_size": args.batch_size}.items() if v is not None}
    )
    checkpoint = _pick(args.checkpoint, settings.resolved_checkpoint)
    manifest = ingest(args.data, args.layout, factor, tuple(args.resize) if args.resize else None)
    samples = [(x, s) for _, x, s in manifest.samples(args.split)]
    if not samples:
        raise SpicError(f"no training images in split {args.split!r} under {args.data}")

    with log_execution_context(f"training on {len(samples)} images"):
        dataset = SemanticSRDataset(samples, factor, cfg.train_quality, settings.coarse_codec_id)
        diffusion = build_diffusion(settings.denoiser, settings.schedule, manifest.n_classes, factor)
        diffusion.to(settings.device)
        trainer = Trainer(diffusion, cfg, settings.seed, settings.num_workers)

        with Progress(
            TextColumn("[bold blue]training"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TextColumn("loss {task.fields[loss]:.4f}"),
            TimeElapsedColumn(),
            console=err_console,
        ) as progress:
            task = progress.add_task("train", total=cfg.steps, loss=float("nan"))
            history = trainer.fit(
                dataset,
                checkpoint,
                settings.denoiser,
                settings.schedule,
                on_step=lambda step, loss, smoothed: progress.update(task, completed=step, loss=smoothed),
            )

    console.print_json(
        data={
            "checkpoint": str(checkpoint),
            "steps": len(history.losses),
            "final_loss": history.losses[-1],
            "final_smoothed_loss": history.smoothed[-1],
        }
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    from src.analysis.viz import emit_plots
    from src.bench.sweep import rd_sweep
    from src.data.loader import ingest

    factor = settings.downscale_factor
    overrides = {
        "quality_ladder": args.quality,
        "baseline_ladder": args.baseline_quality,
        "output_dir": args.out,
        "split": args.split,
        "seed": args.seed,
        "workers": args.workers,
    }
    cfg = settings.sweep.model_validate(
        {**settings.sweep.model_dump(), **{k: v for k, v in overrides.items() if v is not None}}
    )
    sampler = settings.sampler.model_copy(update={"steps": args.steps} if args.steps else {})

    diffusion = None
    if not args.no_diffusion:
        from src.diffusion.checkpoint import load_checkpoint

        checkpoint = _pick(args.checkpoint, settings.resolved_checkpoint)
        if args.checkpoint is None and not checkpoint.exists():
            logger.warning(f"No checkpoint at {checkpoint}; spic rows will be marked unavailable")
        else:
            diffusion, _ = load_checkpoint(checkpoint, settings.device)

    manifest = ingest(args.data, args.layout, factor, tuple(args.resize) if args.resize else None)
    csv_path = rd_sweep(manifest, cfg, diffusion, sampler, factor=factor)

    written = {"results": str(csv_path)}
    if args.plots:
        with log_execution_context("plotting"):
            for metric, path in emit_plots(csv_path, csv_path.parent / "plots").items():
                written[metric] = str(path)
    console.print_json(data=written)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    from src.analysis.viz import emit_plots

    out_dir = _pick(args.out, args.csv.parent / "plots")
    with log_execution_context(f"plotting {args.csv.name}"):
        written = emit_plots(args.csv, out_dir)

    table = Table(title="Charts")
    table.add_column("Metric", style="cyan")
    table.add_column("File", style="green")
    for metric, path in written.items():
        table.add_row(metric, str(path))
    err_console.print(table)
    console.print_json(data={k: str(v) for k, v in written.items()})
    return 0


def cmd_make_synthetic(args: argparse.Namespace) -> int:
    from src.data.synthetic import make_synthetic

    out = _pick(args.out, settings.synthetic_dir)
    root = make_synthetic(out, args.n_train, args.n_val, _pick(args.seed, settings.seed))
    console.print_json(data={"root": str(root), "train": args.n_train, "val": args.n_val})
    return 0


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
    "make-synthetic": cmd_make_synthetic,
}


# ============================================================
# Entry point
# ============================================================

def main(argv: list[str] | None = None) -> int:
    """Run one CLI verb and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        if args.config is not None:
            reload_settings(args.config)
        setup_logger(args.log_level)
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        err_console.print("\n[yellow]Interrupted by user[/yellow]")
        return 130
    except (SpicError, OSError, ValueError) as e:
        logger.exception(f"{args.command} failed")
        err_console.print(f"\n[red]Error:[/red] {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
