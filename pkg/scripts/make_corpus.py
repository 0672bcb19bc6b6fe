#!/usr/bin/env python3
"""Dump the scikit-image sample photographs as 8-bit PGM files.

Produces a train/ and a test/ directory that the `rip` CLI can consume
directly.  Colour photographs are converted to BT.601 luminance first.
"""

import argparse
from pathlib import Path

import numpy as np
from skimage import data as photos

from rip import rgb_to_luminance, write_pgm

TRAIN = [
    "astronaut",
    "brick",
    "cat",
    "cell",
    "chelsea",
    "clock",
    "coins",
    "grass",
    "gravel",
    "hubble_deep_field",
    "immunohistochemistry",
    "page",
    "retina",
    "rocket",
    "shepp_logan_phantom",
    "text",
]
TEST = ["camera", "moon", "coffee"]


def load_plane(name: str) -> np.ndarray:
    img = getattr(photos, name)()
    if img.ndim == 3:
        return rgb_to_luminance(img[:, :, :3])
    if img.dtype.kind == "f":  # unit-range float images
        return img * 255.0
    return img.astype(np.float64)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("corpus"))
    args = parser.parse_args()

    for split, names in (("train", TRAIN), ("test", TEST)):
        outdir = args.out / split
        outdir.mkdir(parents=True, exist_ok=True)
        for name in names:
            plane = load_plane(name)
            path = outdir / f"{name}.pgm"
            write_pgm(path, plane)
            print(f"{path}  {plane.shape[0]}x{plane.shape[1]}")


if __name__ == "__main__":
    main()
