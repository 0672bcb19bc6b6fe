"""Hand-designed linear intra predictors: angular, DC, and planar modes.

Every predictor is materialized as a dense matrix mapping the 3N+1
reference samples to the N*N block pixels (row-major).  Angular modes copy
or interpolate along a fixed direction expressed in degrees:

    90   straight up into the top row
    45   up-right toward the top-right extension
    135  up-left diagonal
    180  straight left into the left column
    225  down-left along the left column

Interpolation weights are kept as exact reals; no fixed-point quantization
and no reference or boundary smoothing is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BlockGeometry

PROVENANCE_DESIGNED_UNIFORM = "designed-uniform"
PROVENANCE_DESIGNED_HEVC = "designed-hevc"
PROVENANCE_RIP_TRAINED = "rip-trained"
PROVENANCES = (
    PROVENANCE_DESIGNED_UNIFORM,
    PROVENANCE_DESIGNED_HEVC,
    PROVENANCE_RIP_TRAINED,
)

UNIFORM_MODE_COUNTS = (5, 9, 13, 17, 21, 25, 29, 33)

# Per-unit displacement (in 1/32 sample steps) of the 33 standard-style
# angular directions, split into a horizontal and a vertical family.
HEVC_ANGLES_HORIZONTAL = (32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26)
HEVC_ANGLES_VERTICAL = (-32, -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32)

# Crossings this close to a sample snap to it, so exactly horizontal,
# vertical and 45-degree rays yield single unit weights.
_SNAP = 1e-9


@dataclass(frozen=True)
class PredictorMatrix:
    """One linear prediction mode: block estimate = M @ references."""

    mode_id: int
    label: str
    M: np.ndarray  # (block_len, ref_len)


@dataclass(frozen=True)
class PredictorSet:
    """Ordered collection of predictor matrices sharing one geometry."""

    geometry: BlockGeometry
    modes: tuple[PredictorMatrix, ...]
    provenance: str
    lam: float = 0.0
    iterations_trained: int = 0

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.modes:
            raise ValueError("a predictor set needs at least one mode")
        shape = (self.geometry.block_len, self.geometry.ref_len)
        for p, mode in enumerate(self.modes):
            if mode.M.shape != shape:
                raise ValueError(
                    f"mode {p} has matrix shape {mode.M.shape}, expected {shape}"
                )
            if mode.mode_id != p:
                raise ValueError(
                    f"mode at position {p} carries mode_id {mode.mode_id}"
                )

    @property
    def k(self) -> int:
        return len(self.modes)


def _split_crossing(cross: float, last: float) -> list[tuple[int, float]]:
    """Weights on the integer sample positions bracketing ``cross``.

    Positions run from -1 (the corner) to ``last``; crossings beyond either
    end clamp to the end sample with unit weight.
    """
    cross = min(max(cross, -1.0), last)
    q = math.floor(cross)
    w = cross - q
    if w < _SNAP:
        return [(q, 1.0)]
    if w > 1.0 - _SNAP:
        return [(q + 1, 1.0)]
    return [(q, 1.0 - w), (q + 1, w)]


def _ray_weights(
    geometry: BlockGeometry, theta_deg: float, j: int, i: int
) -> list[tuple[int, float]]:
    """Reference indices and weights for block pixel (row j, col i).

    The ray leaves the pixel center along the prediction direction until it
    first crosses the top reference line (image row r-1) or the left
    reference line (image column c-1), whichever is nearer.  The crossing
    is interpolated between the two adjacent samples on that line.
    """
    n = geometry.block_size
    rad = math.radians(theta_deg)
    dr = -math.sin(rad)  # negative = upward
    dc = math.cos(rad)

    s_top = (j + 1) / -dr if dr < 0 else math.inf
    s_left = (i + 1) / -dc if dc < 0 else math.inf

    if s_top <= s_left:
        # crossing the top line at column coordinate `cross`;
        # samples: corner at -1, top row at 0..N-1, extension at N..2N-1
        cross = i + s_top * dc
        return [
            (col + 1, w) for col, w in _split_crossing(cross, 2 * n - 1)
        ]
    # crossing the left line at row coordinate `cross`;
    # samples: corner at -1, left column at 0..N-1
    cross = j + s_left * dr
    out = []
    for row, w in _split_crossing(cross, n - 1):
        idx = 0 if row == -1 else 2 * n + 1 + row
        out.append((idx, w))
    return out


def build_angular_matrix(
    geometry: BlockGeometry, theta: float, mode_id: int = 0
) -> PredictorMatrix:
    """Directional predictor copying/interpolating two reference samples.

    Args:
        geometry: block geometry.
        theta: direction in degrees, within [45, 225].
        mode_id: index the matrix will occupy in its set.
    """
    if not 45.0 <= theta <= 225.0:
        raise ValueError(f"theta must lie in [45, 225], got {theta}")
    n = geometry.block_size
    M = np.zeros((geometry.block_len, geometry.ref_len), dtype=np.float64)
    for j in range(n):
        for i in range(n):
            row = j * n + i
            for idx, w in _ray_weights(geometry, theta, j, i):
                M[row, idx] += w
    return PredictorMatrix(mode_id=mode_id, label=f"angular {theta:g}°", M=M)


def build_dc_matrix(
    geometry: BlockGeometry, style: str = "hevc", mode_id: int = 0
) -> PredictorMatrix:
    """Flat predictor averaging reference samples.

    ``average`` averages all 3N+1 bounding samples; ``hevc`` averages the
    N top-row and N left-column samples only.
    """
    n = geometry.block_size
    M = np.empty((geometry.block_len, geometry.ref_len), dtype=np.float64)
    if style == "average":
        M[:] = 1.0 / geometry.ref_len
    elif style == "hevc":
        M[:] = 0.0
        M[:, 1 : n + 1] = 1.0 / (2 * n)
        M[:, 2 * n + 1 :] = 1.0 / (2 * n)
    else:
        raise ValueError(f"unknown DC style {style!r}")
    return PredictorMatrix(mode_id=mode_id, label=f"dc ({style})", M=M)


def build_planar_matrix(geometry: BlockGeometry, mode_id: int = 0) -> PredictorMatrix:
    """Four-point interpolation from the block-corner references.

    prediction(j, i) = [ (N-1-i) * left_j + (i+1) * top_right
                       + (N-1-j) * top_i + (j+1) * bottom_left ] / 2N

    where top_right is the first top-right extension sample and the absent
    below-left sample is substituted by the bottom-most left sample.
    """
    n = geometry.block_size
    M = np.zeros((geometry.block_len, geometry.ref_len), dtype=np.float64)
    idx_tr = n + 1  # first top-right sample
    idx_bl = 3 * n  # bottom-most left sample stands in for below-left
    for j in range(n):
        for i in range(n):
            row = j * n + i
            M[row, 2 * n + 1 + j] += (n - 1 - i) / (2 * n)  # left_j
            M[row, idx_tr] += (i + 1) / (2 * n)
            M[row, 1 + i] += (n - 1 - j) / (2 * n)  # top_i
            M[row, idx_bl] += (j + 1) / (2 * n)
    return PredictorMatrix(mode_id=mode_id, label="planar", M=M)


def uniform_angles(mode_count: int) -> list[float]:
    """Evenly spaced directions over [45, 225], endpoints included."""
    if mode_count not in UNIFORM_MODE_COUNTS:
        raise ValueError(
            f"mode_count must be one of {UNIFORM_MODE_COUNTS}, got {mode_count}"
        )
    return [45.0 + (180.0 * p) / (mode_count - 1) for p in range(mode_count)]


def build_uniform_angular_set(
    geometry: BlockGeometry, mode_count: int
) -> PredictorSet:
    """Angular-only set over uniformly divided directions.

    The division always lands on 45, 90, 135, 180 and 225 degrees, so the
    horizontal, vertical and both diagonal orientations are preserved at
    every supported mode count.
    """
    modes = tuple(
        build_angular_matrix(geometry, theta, mode_id=p)
        for p, theta in enumerate(uniform_angles(mode_count))
    )
    return PredictorSet(
        geometry=geometry, modes=modes, provenance=PROVENANCE_DESIGNED_UNIFORM
    )


def hevc_direction_angles() -> list[float]:
    """The 33 standard angular directions mapped onto [45, 225] degrees.

    Horizontal-family displacements sweep 225 down to just past 135; the
    vertical family continues from 135 through 90 up to 45.
    """
    angles = []
    for d in HEVC_ANGLES_HORIZONTAL:
        angles.append(math.degrees(math.atan2(-d / 32.0, -1.0)) % 360.0)
    for d in HEVC_ANGLES_VERTICAL:
        angles.append(math.degrees(math.atan2(1.0, d / 32.0)))
    return angles


def build_hevc_set(geometry: BlockGeometry) -> PredictorSet:
    """Planar + DC + the 33 standard angular directions (k = 35)."""
    modes = [
        build_planar_matrix(geometry, mode_id=0),
        build_dc_matrix(geometry, style="hevc", mode_id=1),
    ]
    for p, theta in enumerate(hevc_direction_angles(), start=2):
        modes.append(build_angular_matrix(geometry, theta, mode_id=p))
    return PredictorSet(
        geometry=geometry, modes=tuple(modes), provenance=PROVENANCE_DESIGNED_HEVC
    )
