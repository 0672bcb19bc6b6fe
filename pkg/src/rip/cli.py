"""Command-line front end.

Subcommands: build-modes, extract-patches, train, eval-best, eval-worst,
predict-image, report.  All outputs are deterministic given identical
inputs and seed.  The RIP_THREADS environment variable, when set, caps the
BLAS thread pools backing the matrix kernels.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import designed, engine, geometry, image_io, regression

CSV_HEADER = (
    "image,block_size,mode_count,provenance,protocol,mse,psnr_db,blocks,mode_histogram"
)
IMAGE_SUFFIXES = (".pgm", ".png")


@dataclass
class RunConfig:
    """Validated parameters for one subcommand invocation."""

    command: str
    images: list[Path] = field(default_factory=list)
    corpus: Path | None = None
    model_path: Path | None = None
    out_path: Path | None = None
    csv_path: Path | None = None
    csv_inputs: list[Path] = field(default_factory=list)
    block_size: int = 8
    mode_count: str = "33"
    lam: float = 1.0
    iterations: int = 100
    patches_per_image: int = 4000
    seed: int = 0
    protocol: str = "best"

    def validate(self) -> None:
        if self.block_size not in (4, 8, 16, 32):
            raise ValueError(f"--block-size must be one of 4, 8, 16, 32, got {self.block_size}")
        if self.mode_count != "hevc":
            if int(self.mode_count) not in designed.UNIFORM_MODE_COUNTS:
                raise ValueError(
                    f"--modes must be 'hevc' or one of {designed.UNIFORM_MODE_COUNTS}"
                )
        if self.lam < 0:
            raise ValueError("--lambda must be >= 0")
        if self.iterations < 1:
            raise ValueError("--iters must be >= 1")
        if self.patches_per_image < 0:
            raise ValueError("--patches must be >= 0")
        if self.seed < 0:
            raise ValueError("--seed must be >= 0")
        if self.protocol not in ("best", "worst"):
            raise ValueError(f"--protocol must be 'best' or 'worst', got {self.protocol}")


def _fmt(value: float) -> str:
    """CSV numeric formatting: 6 significant digits; inf stays 'inf'."""
    if math.isinf(value):
        return "inf"
    return f"{value:.6g}"


def append_csv_row(
    path: Path, report: engine.EvaluationReport, provenance: str
) -> None:
    """Append one evaluation row, writing the header only on a fresh file."""
    fresh = not path.exists() or path.stat().st_size == 0
    hist = ";".join(str(int(c)) for c in report.mode_histogram)
    row = ",".join(
        [
            report.image_id,
            str(report.geometry.block_size),
            str(len(report.mode_histogram)),
            provenance,
            report.protocol,
            _fmt(report.mse),
            _fmt(report.psnr_db),
            str(len(report.block_records)),
            hist,
        ]
    )
    with open(path, "a", encoding="ascii") as f:
        if fresh:
            f.write(CSV_HEADER + "\n")
        f.write(row + "\n")


def _corpus_images(corpus: Path) -> list[Path]:
    paths = sorted(
        p for p in corpus.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not paths:
        raise ValueError(f"no .pgm/.png images found in {corpus}")
    return paths


def _build_designed_set(cfg: RunConfig) -> designed.PredictorSet:
    geom = geometry.BlockGeometry(cfg.block_size)
    if cfg.mode_count == "hevc":
        return designed.build_hevc_set(geom)
    return designed.build_uniform_angular_set(geom, int(cfg.mode_count))


def cmd_build_modes(cfg: RunConfig) -> None:
    regression.save_model(_build_designed_set(cfg), cfg.out_path)


def cmd_extract_patches(cfg: RunConfig) -> None:
    geom = geometry.BlockGeometry(cfg.block_size)
    data = _harvest(cfg.corpus, geom, cfg.patches_per_image, cfg.seed)
    ids = np.array([str(i) for i, _, _ in data.source_ids])
    rows = np.array([r for _, r, _ in data.source_ids], dtype=np.int64)
    cols = np.array([c for _, _, c in data.source_ids], dtype=np.int64)
    np.savez(
        cfg.out_path,
        X=data.X,
        Y=data.Y,
        block_size=np.int64(geom.block_size),
        image_ids=ids,
        rows=rows,
        cols=cols,
    )


def _harvest(
    corpus: Path, geom: geometry.BlockGeometry, per_image: int, seed: int
) -> geometry.PatchDataset:
    """Sample patches from every corpus image; per-image seeds derive from
    the base seed plus the image's position in sorted order."""
    datasets = []
    for i, path in enumerate(_corpus_images(corpus)):
        plane = image_io.decode_to_luminance(path)
        datasets.append(
            geometry.sample_patches(
                plane, geom, per_image, seed + i, image_id=path.name
            )
        )
    return geometry.merge_datasets(datasets)


def cmd_train(cfg: RunConfig) -> None:
    init = regression.load_model(cfg.model_path)
    data = _harvest(cfg.corpus, init.geometry, cfg.patches_per_image, cfg.seed)
    config = regression.TrainingConfig(lam=cfg.lam, iterations=cfg.iterations)
    trained, trace = regression.train(data, init, config)
    regression.save_model(trained, cfg.out_path)
    if trace.iterations:
        print(
            f"trained {trained.k} modes on {data.count} patches: "
            f"{trace.iterations} iterations, final total squared error "
            f"{trace.total_squared_error[-1]:.6g}"
        )


def _crop_to_blocks(plane: np.ndarray, n: int) -> np.ndarray:
    h, w = plane.shape
    return plane[: (h // n) * n, : (w // n) * n]


def _eval_one(cfg: RunConfig, pset: designed.PredictorSet, path: Path) -> None:
    plane = image_io.decode_to_luminance(path)
    if cfg.protocol == "worst":
        plane = _crop_to_blocks(plane, pset.geometry.block_size)
        _, report = engine.worst_case_reconstruct(plane, pset, image_id=path.name)
    else:
        report = engine.best_case_evaluate(plane, pset, image_id=path.name)
    append_csv_row(cfg.csv_path, report, pset.provenance)
    print(f"{path.name}: {cfg.protocol}-case psnr {_fmt(report.psnr_db)} dB")


def cmd_eval(cfg: RunConfig) -> None:
    pset = regression.load_model(cfg.model_path)
    for path in cfg.images:
        _eval_one(cfg, pset, path)


def cmd_predict_image(cfg: RunConfig) -> None:
    pset = regression.load_model(cfg.model_path)
    plane = image_io.decode_to_luminance(cfg.images[0])
    plane = _crop_to_blocks(plane, pset.geometry.block_size)
    if cfg.protocol == "worst":
        out, _ = engine.worst_case_reconstruct(plane, pset)
    else:
        out = engine.best_case_prediction(plane, pset)
    image_io.write_pgm(cfg.out_path, out)


def cmd_report(cfg: RunConfig) -> None:
    rows: list[str] = []
    for path in cfg.csv_inputs:
        lines = path.read_text(encoding="ascii").splitlines()
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError(f"{path} is not an evaluation CSV")
        rows.extend(lines[1:])
    with open(cfg.out_path, "w", encoding="ascii") as f:
        f.write(CSV_HEADER + "\n")
        for row in rows:
            f.write(row + "\n")


def _apply_thread_cap() -> None:
    raw = os.environ.get("RIP_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ValueError(f"RIP_THREADS must be a positive integer, got {raw!r}")
    import threadpoolctl

    threadpoolctl.threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rip",
        description="Linear intra-prediction: designed modes, regression "
        "refinement, and best/worst-case evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")

    p = sub.add_parser("build-modes", help="write a designed predictor set")
    p.add_argument("--block-size", type=int, default=8, choices=(4, 8, 16, 32))
    p.add_argument("--modes", default="33", help="angular mode count or 'hevc'")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("extract-patches", help="harvest training patches to .npz")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--block-size", type=int, default=8, choices=(4, 8, 16, 32))
    p.add_argument("--patches", type=int, default=4000, help="patches per image")
    add_seed(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train", help="refine a predictor set on a corpus")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--init", type=Path, required=True, help="initial model file")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--patches", type=int, default=4000, help="patches per image")
    add_seed(p)
    p.add_argument("--out", type=Path, required=True)

    for name, proto in (("eval-best", "best"), ("eval-worst", "worst")):
        p = sub.add_parser(name, help=f"{proto}-case evaluation to CSV")
        p.add_argument("--model", type=Path, required=True)
        p.add_argument("--image", type=Path, action="append", required=True)
        p.add_argument("--csv", type=Path, required=True)
        p.set_defaults(protocol=proto)

    p = sub.add_parser("predict-image", help="write a prediction/reconstruction PGM")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--protocol", choices=("best", "worst"), default="best")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="merge evaluation CSVs")
    p.add_argument("csvs", type=Path, nargs="+")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _to_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if hasattr(args, "image"):
        imgs = args.image if isinstance(args.image, list) else [args.image]
        cfg.images = imgs
    for attr, name in (
        ("corpus", "corpus"),
        ("model", "model_path"),
        ("init", "model_path"),
        ("out", "out_path"),
        ("csv", "csv_path"),
        ("block_size", "block_size"),
        ("modes", "mode_count"),
        ("lam", "lam"),
        ("iters", "iterations"),
        ("patches", "patches_per_image"),
        ("seed", "seed"),
        ("protocol", "protocol"),
    ):
        if hasattr(args, attr):
            setattr(cfg, name, getattr(args, attr))
    if hasattr(args, "csvs"):
        cfg.csv_inputs = args.csvs
    cfg.mode_count = str(cfg.mode_count)
    return cfg


_HANDLERS = {
    "build-modes": cmd_build_modes,
    "extract-patches": cmd_extract_patches,
    "train": cmd_train,
    "eval-best": cmd_eval,
    "eval-worst": cmd_eval,
    "predict-image": cmd_predict_image,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        _apply_thread_cap()
        cfg = _to_config(args)
        cfg.validate()
        _HANDLERS[stage](cfg)
    except Exception as exc:
        print(f"error: {stage}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
