"""Cluster-and-regress refinement of predictor sets, plus model files.

Training alternates two steps for a fixed number of iterations: assign each
training patch to the mode predicting it with least L2 error, then refit
every non-empty cluster's matrix by ridge regression

    M_j = Y_j X_j^T (X_j X_j^T + lam * I)^{-1}

solved as a symmetric positive-definite system.  Ties in the assignment
break to the lowest mode index; clusters that receive no samples keep
their previous matrix, so the mode count never shrinks.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .designed import PROVENANCE_RIP_TRAINED, PROVENANCES, PredictorMatrix, PredictorSet
from .geometry import BlockGeometry, PatchDataset

# Matrices changing less than this in max-norm, with zero reassignments,
# count as a fixed point and allow early exit.
FIXED_POINT_TOL = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when lam = 0 meets a rank-deficient normal-equation system."""


@dataclass
class TrainingConfig:
    """Knobs for the refinement loop.

    ``lam`` is the Tikhonov weight on the raw [0, 255] pixel scale; the
    default 1.0 is tiny next to the normal-equation diagonal and acts only
    as a rank guard.
    """

    lam: float = 1.0
    iterations: int = 100
    record_trace: bool = True

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class ClusterAssignment:
    """Per-sample winning mode and its L2 prediction error."""

    labels: np.ndarray  # (S,) int
    per_sample_error: np.ndarray  # (S,) float


@dataclass
class TrainingTrace:
    """Per-iteration observability for the refinement loop."""

    total_squared_error: list[float] = field(default_factory=list)
    cluster_sizes: list[np.ndarray] = field(default_factory=list)
    reassignments: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.reassignments)


def prediction_error(mode: PredictorMatrix, x: np.ndarray, y: np.ndarray) -> float:
    """Euclidean norm of the residual y - M x."""
    block_len, ref_len = mode.M.shape
    if x.shape != (ref_len,):
        raise ValueError(f"x has shape {x.shape}, expected ({ref_len},)")
    if y.shape != (block_len,):
        raise ValueError(f"y has shape {y.shape}, expected ({block_len},)")
    return float(np.linalg.norm(y - mode.M @ x))


def _squared_errors(matrices: list[np.ndarray], X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """(k, S) squared L2 prediction errors of every mode on every column."""
    errs = np.empty((len(matrices), X.shape[1]), dtype=np.float64)
    for p, M in enumerate(matrices):
        resid = Y - M @ X
        errs[p] = np.einsum("ij,ij->j", resid, resid)
    return errs


def assign_clusters(dataset: PatchDataset, pset: PredictorSet) -> ClusterAssignment:
    """Label every sample with its argmin-error mode (lowest index on ties)."""
    if dataset.geometry != pset.geometry:
        raise ValueError("dataset and predictor set disagree on geometry")
    if dataset.count < 1:
        raise ValueError("dataset is empty")
    if pset.k < 1:
        raise ValueError("predictor set is empty")
    errs = _squared_errors([m.M for m in pset.modes], dataset.X, dataset.Y)
    labels = errs.argmin(axis=0)
    per_sample = np.sqrt(errs[labels, np.arange(dataset.count)])
    return ClusterAssignment(labels=labels, per_sample_error=per_sample)


def ridge_update(X: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge-regression predictor for one cluster.

    Returns M = Y X^T (X X^T + lam I)^{-1}, computed by a Cholesky-class
    solve of the SPD system rather than explicit inversion.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError(f"incompatible shapes X {X.shape}, Y {Y.shape}")
    if X.shape[1] < 1:
        raise ValueError("cluster must contain at least one sample")
    A = X @ X.T
    if lam > 0:
        A[np.diag_indices_from(A)] += lam
    B = Y @ X.T
    try:
        return scipy.linalg.solve(A, B.T, assume_a="pos").T
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal-equation system is singular; use lam > 0"
        ) from exc


def train(
    dataset: PatchDataset, init: PredictorSet, config: TrainingConfig
) -> tuple[PredictorSet, TrainingTrace]:
    """Refine ``init`` on ``dataset`` by alternating assignment and ridge fits.

    Runs ``config.iterations`` rounds, exiting early only at an exact fixed
    point (no reassignments and matrix change below ``FIXED_POINT_TOL``).
    Mode j of the output refines mode j of the input; labels and order are
    preserved.  The trace records, per completed iteration, the total
    squared error under the freshly updated matrices, the cluster sizes,
    and how many labels changed relative to the previous iteration.
    """
    if dataset.geometry != init.geometry:
        raise ValueError("dataset and initial set disagree on geometry")
    if dataset.count < 1:
        raise ValueError("dataset is empty")
    X, Y = dataset.X, dataset.Y
    k = init.k
    matrices = [m.M for m in init.modes]
    trace = TrainingTrace()
    prev_labels: np.ndarray | None = None
    iterations_run = 0

    for _ in range(config.iterations):
        errs = _squared_errors(matrices, X, Y)
        labels = errs.argmin(axis=0)
        reassigned = (
            dataset.count if prev_labels is None else int((labels != prev_labels).sum())
        )

        max_delta = 0.0
        new_matrices = []
        total_sq = 0.0
        for j in range(k):
            cols = labels == j
            if cols.any():
                Mj = ridge_update(X[:, cols], Y[:, cols], config.lam)
                resid = Y[:, cols] - Mj @ X[:, cols]
                total_sq += float(np.einsum("ij,ij->", resid, resid))
            else:
                Mj = matrices[j]
            max_delta = max(max_delta, float(np.abs(Mj - matrices[j]).max()))
            new_matrices.append(Mj)
        matrices = new_matrices
        iterations_run += 1

        if config.record_trace:
            trace.total_squared_error.append(total_sq)
            trace.cluster_sizes.append(np.bincount(labels, minlength=k))
            trace.reassignments.append(reassigned)
        prev_labels = labels
        if reassigned == 0 and max_delta < FIXED_POINT_TOL:
            break

    modes = tuple(
        PredictorMatrix(mode_id=j, label=init.modes[j].label, M=matrices[j])
        for j in range(k)
    )
    trained = PredictorSet(
        geometry=init.geometry,
        modes=modes,
        provenance=PROVENANCE_RIP_TRAINED,
        lam=config.lam,
        iterations_trained=iterations_run,
    )
    return trained, trace


# --- model files ----------------------------------------------------------
#
# Binary, little-endian:
#   magic "RIPM", version u32, block_size u32, ref_len u32, block_len u32,
#   mode count k u32, provenance u8, lam f64, iterations_trained u32,
#   then k records of {label length u16, label UTF-8, block_len*ref_len f64
#   row-major matrix entries}.

MODEL_MAGIC = b"RIPM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4s5IBdI")
_LABEL_LEN = struct.Struct("<H")


class ModelFormatError(ValueError):
    """Raised when a model file is malformed or inconsistent."""


def save_model(pset: PredictorSet, path) -> None:
    """Write a predictor set losslessly (full float64 precision)."""
    geom = pset.geometry
    chunks = [
        _HEADER.pack(
            MODEL_MAGIC,
            MODEL_VERSION,
            geom.block_size,
            geom.ref_len,
            geom.block_len,
            pset.k,
            PROVENANCES.index(pset.provenance),
            pset.lam,
            pset.iterations_trained,
        )
    ]
    for mode in pset.modes:
        label = mode.label.encode("utf-8")
        if len(label) > 0xFFFF:
            raise ValueError(f"mode label too long ({len(label)} bytes)")
        chunks.append(_LABEL_LEN.pack(len(label)))
        chunks.append(label)
        chunks.append(np.ascontiguousarray(mode.M, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


def load_model(path) -> PredictorSet:
    """Read a model file back; the round trip is bitwise exact."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise ModelFormatError(
            f"truncated model file: {len(data)} bytes, header needs {_HEADER.size}"
        )
    magic, version, block_size, ref_len, block_len, k, prov_code, lam, iters = (
        _HEADER.unpack_from(data, 0)
    )
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    if block_size < 1 or ref_len != 3 * block_size + 1 or block_len != block_size**2:
        raise ModelFormatError(
            f"inconsistent geometry: block_size={block_size}, "
            f"ref_len={ref_len}, block_len={block_len}"
        )
    if prov_code >= len(PROVENANCES):
        raise ModelFormatError(f"unknown provenance code {prov_code}")
    if lam < 0:
        raise ModelFormatError(f"negative lam {lam}")
    if k < 1:
        raise ModelFormatError("model declares zero modes")

    offset = _HEADER.size
    matrix_bytes = block_len * ref_len * 8
    modes = []
    for j in range(k):
        if offset == len(data):
            raise ModelFormatError(
                f"shape inconsistency: header declares {k} matrices, "
                f"file contains {j}"
            )
        if offset + _LABEL_LEN.size > len(data):
            raise ModelFormatError(f"truncated model file in record {j} header")
        (label_len,) = _LABEL_LEN.unpack_from(data, offset)
        offset += _LABEL_LEN.size
        if offset + label_len > len(data):
            raise ModelFormatError(f"truncated model file in record {j} label")
        try:
            label = data[offset : offset + label_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"record {j} label is not valid UTF-8") from exc
        offset += label_len
        if offset + matrix_bytes > len(data):
            raise ModelFormatError(f"truncated model file in record {j} matrix")
        M = (
            np.frombuffer(data, dtype="<f8", count=block_len * ref_len, offset=offset)
            .reshape(block_len, ref_len)
            .copy()
        )
        offset += matrix_bytes
        modes.append(PredictorMatrix(mode_id=j, label=label, M=M))
    if offset != len(data):
        raise ModelFormatError(
            f"{len(data) - offset} trailing bytes after {k} matrix records"
        )
    return PredictorSet(
        geometry=BlockGeometry(block_size),
        modes=tuple(modes),
        provenance=PROVENANCES[prov_code],
        lam=lam,
        iterations_trained=iters,
    )
