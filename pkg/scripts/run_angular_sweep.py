#!/usr/bin/env python3
"""Sweep the uniform angular mode counts and report designed vs refined PSNR.

For each mode count we build the uniformly spaced angular set, refine it on
patches harvested from the training images, and score both sets on every
test image under the best-case and worst-case protocols.
"""

import argparse
import time
from pathlib import Path

from rip import (
    UNIFORM_MODE_COUNTS,
    BlockGeometry,
    TrainingConfig,
    best_case_evaluate,
    build_uniform_angular_set,
    decode_to_luminance,
    merge_datasets,
    sample_patches,
    train,
    worst_case_reconstruct,
)


def crop_to_multiple(plane, n):
    h, w = plane.shape
    return plane[: h - h % n, : w - w % n]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train-dir", type=Path, default=Path("corpus/train"))
    parser.add_argument("--test-dir", type=Path, default=Path("corpus/test"))
    parser.add_argument("--block-size", type=int, default=8)
    parser.add_argument("--patches", type=int, default=6400, help="per training image")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0)
    parser.add_argument("--iters", type=int, default=40)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--counts", type=int, nargs="*", default=list(UNIFORM_MODE_COUNTS))
    args = parser.parse_args()

    geom = BlockGeometry(args.block_size)
    train_paths = sorted(args.train_dir.glob("*.pgm"))
    test_planes = {p.stem: decode_to_luminance(p) for p in sorted(args.test_dir.glob("*.pgm"))}
    if not train_paths or not test_planes:
        raise SystemExit("empty corpus; run make_corpus.py first")

    dataset = merge_datasets(
        [
            sample_patches(decode_to_luminance(p), geom, args.patches, args.seed + i, image_id=p.stem)
            for i, p in enumerate(train_paths)
        ]
    )
    print(f"harvested {dataset.count} patches from {len(train_paths)} images (N={geom.block_size})")
    print(f"{'count':>5} {'image':>8} {'best dsn':>9} {'best rip':>9} {'gain':>7} {'worst dsn':>9} {'worst rip':>9} {'gain':>7}")

    for count in args.counts:
        designed = build_uniform_angular_set(geom, count)
        t0 = time.perf_counter()
        refined, trace = train(dataset, designed, TrainingConfig(lam=args.lam, iterations=args.iters))
        elapsed = time.perf_counter() - t0
        for name, plane in test_planes.items():
            cropped = crop_to_multiple(plane, geom.block_size)
            bd = best_case_evaluate(plane, designed).psnr_db
            br = best_case_evaluate(plane, refined).psnr_db
            _, wd = worst_case_reconstruct(cropped, designed)
            _, wr = worst_case_reconstruct(cropped, refined)
            print(
                f"{count:>5} {name:>8} {bd:9.3f} {br:9.3f} {br - bd:+7.3f}"
                f" {wd.psnr_db:9.3f} {wr.psnr_db:9.3f} {wr.psnr_db - wd.psnr_db:+7.3f}"
            )
        print(f"      trained {trace.iterations} iterations in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
