"""Runtime prediction and the best-case / worst-case evaluation protocols.

Best case: every block's references come from the original image, so the
score reflects pure predictor quality under lossless neighbors.

Worst case: only the top-left block is copied from the source; every other
block is predicted, in raster order, from the evolving reconstruction with
no residual ever added.  Mode choice still compares against the original
block (encoder-side decision, mode bits assumed free).

Predictions stay real-valued end to end; nothing is clamped or rounded
inside error computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .designed import PredictorMatrix, PredictorSet
from .geometry import BlockGeometry, extract_block, extract_reference

PEAK = 255.0


@dataclass(frozen=True)
class StackedPredictor:
    """All mode matrices concatenated vertically: one matvec predicts all."""

    geometry: BlockGeometry
    M_stacked: np.ndarray  # (k * block_len, ref_len)
    k: int

    def __post_init__(self) -> None:
        want = (self.k * self.geometry.block_len, self.geometry.ref_len)
        if self.k < 1 or self.M_stacked.shape != want:
            raise ValueError(
                f"stacked matrix has shape {self.M_stacked.shape}, expected {want}"
            )


class BlockRecord(NamedTuple):
    row: int
    col: int
    mode: int
    squared_error: float


@dataclass
class EvaluationReport:
    """Outcome of one evaluation protocol on one image."""

    image_id: str
    geometry: BlockGeometry
    protocol: str  # "best" or "worst"
    mode_histogram: np.ndarray  # (k,) counts over recorded blocks
    block_records: list[BlockRecord]
    mse: float
    psnr_db: float  # math.inf when mse == 0


def psnr_from_mse(mse: float) -> float:
    """10 log10(peak^2 / mse); exact-zero mse maps to the inf marker."""
    if mse < 0:
        raise ValueError("mse must be >= 0")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB between two equally shaped pixel arrays (peak 255)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty input")
    diff = a - b
    return psnr_from_mse(float(np.mean(diff * diff)))


def predict(mode: PredictorMatrix, x: np.ndarray) -> np.ndarray:
    """Block estimate M x as unclamped reals (row-major, length N*N)."""
    if x.shape != (mode.M.shape[1],):
        raise ValueError(f"x has shape {x.shape}, expected ({mode.M.shape[1]},)")
    return mode.M @ x


def stack(pset: PredictorSet) -> StackedPredictor:
    """Concatenate all mode matrices vertically, in mode order."""
    if pset.k < 1:
        raise ValueError("predictor set is empty")
    return StackedPredictor(
        geometry=pset.geometry,
        M_stacked=np.vstack([m.M for m in pset.modes]),
        k=pset.k,
    )


def predict_all(stacked: StackedPredictor, x: np.ndarray) -> np.ndarray:
    """All k block estimates from a single matrix-vector product, (k, N*N)."""
    if x.shape != (stacked.M_stacked.shape[1],):
        raise ValueError(
            f"x has shape {x.shape}, expected ({stacked.M_stacked.shape[1]},)"
        )
    return (stacked.M_stacked @ x).reshape(stacked.k, -1)


def select_mode(
    predictors: Union[PredictorSet, StackedPredictor],
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[int, np.ndarray, float]:
    """Best mode for target y: (mode index, estimate, L2 error).

    Ties break to the lowest mode index.  The argmin is invariant to
    whether errors are compared as norms or squared norms.
    """
    if isinstance(predictors, StackedPredictor):
        preds = predict_all(predictors, x)
    else:
        preds = np.stack([predict(m, x) for m in predictors.modes])
    if y.shape != (preds.shape[1],):
        raise ValueError(f"y has shape {y.shape}, expected ({preds.shape[1]},)")
    resid = preds - y
    sq = np.einsum("ij,ij->i", resid, resid)
    p = int(sq.argmin())
    return p, preds[p], float(math.sqrt(sq[p]))


def _block_grid(plane: np.ndarray, n: int) -> tuple[int, int]:
    h, w = plane.shape
    rows, cols = h // n, w // n
    if rows < 1 or cols < 1:
        raise ValueError(
            f"image {h}x{w} is smaller than one {n}x{n} block"
        )
    return rows, cols


def _best_case_core(plane: np.ndarray, pset: PredictorSet):
    """Shared best-case sweep: references from the original image."""
    geom = pset.geometry
    n = geom.block_size
    rows, cols = _block_grid(plane, n)
    nblocks = rows * cols

    X = np.empty((geom.ref_len, nblocks), dtype=np.float64)
    Y = np.empty((geom.block_len, nblocks), dtype=np.float64)
    positions = []
    b = 0
    for a in range(rows):
        for bb in range(cols):
            r, c = a * n, bb * n
            X[:, b] = extract_reference(plane, r, c, geom)
            Y[:, b] = extract_block(plane, r, c, geom)
            positions.append((r, c))
            b += 1

    stacked = stack(pset)
    # one stacked product covers every mode of every block
    P = (stacked.M_stacked @ X).reshape(pset.k, geom.block_len, nblocks)
    resid = P - Y[np.newaxis]
    sq = np.einsum("kpb,kpb->kb", resid, resid)
    labels = sq.argmin(axis=0)
    cols_idx = np.arange(nblocks)
    per_block_sq = sq[labels, cols_idx]
    chosen = P[labels, :, cols_idx]  # (nblocks, block_len)
    return positions, labels, per_block_sq, chosen


def best_case_evaluate(
    plane: np.ndarray, pset: PredictorSet, image_id: str = ""
) -> EvaluationReport:
    """Score every block of the tiled grid with references from the original.

    Edge blocks whose references stick outside the image use the standard
    substitution rule, so every tiled block is scored.  MSE aggregates
    per-pixel squared error over all evaluated blocks.
    """
    positions, labels, per_block_sq, _ = _best_case_core(plane, pset)
    geom = pset.geometry
    records = [
        BlockRecord(r, c, int(labels[b]), float(per_block_sq[b]))
        for b, (r, c) in enumerate(positions)
    ]
    mse = float(per_block_sq.sum()) / (len(positions) * geom.block_len)
    return EvaluationReport(
        image_id=image_id,
        geometry=geom,
        protocol="best",
        mode_histogram=np.bincount(labels, minlength=pset.k),
        block_records=records,
        mse=mse,
        psnr_db=psnr_from_mse(mse),
    )


def best_case_prediction(plane: np.ndarray, pset: PredictorSet) -> np.ndarray:
    """Best-case per-block estimates assembled into a plane.

    Output covers the tiled grid only (dimensions rounded down to block
    multiples) and is unclamped; quantization happens at image write-out.
    """
    positions, _, _, chosen = _best_case_core(plane, pset)
    n = pset.geometry.block_size
    rows, cols = _block_grid(plane, n)
    out = np.empty((rows * n, cols * n), dtype=np.float64)
    for b, (r, c) in enumerate(positions):
        out[r : r + n, c : c + n] = chosen[b].reshape(n, n)
    return out


def worst_case_reconstruct(
    plane: np.ndarray, pset: PredictorSet, image_id: str = ""
) -> tuple[np.ndarray, EvaluationReport]:
    """Reconstruct the image from the top-left block alone, no residuals.

    Blocks are visited in raster order.  The top-left block is copied
    verbatim; every other block extracts references from the evolving
    reconstruction (pixels not yet written count as unavailable), picks the
    mode minimizing error against the original block, and writes the raw
    prediction.  Image dimensions must be multiples of the block size.

    Returns the real-valued reconstruction and a report whose MSE covers
    the whole image.
    """
    geom = pset.geometry
    n = geom.block_size
    h, w = plane.shape
    if h % n != 0 or w % n != 0:
        raise ValueError(
            f"image {h}x{w} is not a multiple of the block size {n}"
        )
    rows, cols = _block_grid(plane, n)
    stacked = stack(pset)

    # NaN marks pixels not yet reconstructed; the availability mask keeps
    # them from ever being read, so any NaN in the output is a causality bug.
    recon = np.full((h, w), np.nan, dtype=np.float64)
    available = np.zeros((h, w), dtype=bool)
    hist = np.zeros(pset.k, dtype=np.int64)
    records: list[BlockRecord] = []

    for a in range(rows):
        for bb in range(cols):
            r, c = a * n, bb * n
            if a == 0 and bb == 0:
                recon[r : r + n, c : c + n] = plane[r : r + n, c : c + n]
                available[r : r + n, c : c + n] = True
                continue
            x = extract_reference(recon, r, c, geom, availability=available)
            y = extract_block(plane, r, c, geom)
            p, estimate, err = select_mode(stacked, x, y)
            recon[r : r + n, c : c + n] = estimate.reshape(n, n)
            available[r : r + n, c : c + n] = True
            hist[p] += 1
            records.append(BlockRecord(r, c, p, err * err))

    diff = recon - plane
    mse = float(np.mean(diff * diff))
    report = EvaluationReport(
        image_id=image_id,
        geometry=geom,
        protocol="worst",
        mode_histogram=hist,
        block_records=records,
        mse=mse,
        psnr_db=psnr_from_mse(mse),
    )
    return recon, report
