"""Block/reference pixel layout and training-patch extraction.

An NxN block is predicted from the 3N+1 samples bounding it on the top and
left.  One fixed scan order is used everywhere a reference vector appears:

    index 0            corner sample at (r-1, c-1)
    indices 1..N       top row, (r-1, c) .. (r-1, c+N-1)
    indices N+1..2N    top-right extension, (r-1, c+N) .. (r-1, c+2N-1)
    indices 2N+1..3N   left column, (r, c-1) .. (r+N-1, c-1)

Pixel values are carried as float64 throughout; quantization back to 8 bit
happens only when an image is written out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MID_GRAY = 128.0


def reference_length(block_size: int) -> int:
    """Number of bounding samples feeding the prediction of an NxN block."""
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    return 3 * block_size + 1


@dataclass(frozen=True)
class BlockGeometry:
    """Geometry of an NxN block and its 3N+1 bounding reference samples."""

    block_size: int

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")

    @property
    def ref_len(self) -> int:
        return 3 * self.block_size + 1

    @property
    def block_len(self) -> int:
        return self.block_size * self.block_size


def reference_coords(geometry: BlockGeometry, r: int, c: int) -> np.ndarray:
    """(3N+1, 2) array of (row, col) image coordinates in reference scan order.

    Coordinates may fall outside the image; availability is resolved by
    :func:`extract_reference`.
    """
    n = geometry.block_size
    coords = np.empty((geometry.ref_len, 2), dtype=np.int64)
    coords[0] = (r - 1, c - 1)
    for i in range(2 * n):
        coords[1 + i] = (r - 1, c + i)  # top row then top-right extension
    for j in range(n):
        coords[2 * n + 1 + j] = (r + j, c - 1)  # left column
    return coords


def _check_block_inside(plane: np.ndarray, r: int, c: int, n: int) -> None:
    h, w = plane.shape
    if r < 0 or c < 0 or r + n > h or c + n > w:
        raise ValueError(
            f"{n}x{n} block at ({r}, {c}) extends past the {h}x{w} image"
        )


def extract_reference(
    plane: np.ndarray,
    r: int,
    c: int,
    geometry: BlockGeometry,
    availability: np.ndarray | None = None,
) -> np.ndarray:
    """Gather the 3N+1 reference samples for the block whose top-left pixel
    is (r, c), substituting unavailable samples.

    A sample is unavailable when it lies outside the image, or when an
    ``availability`` mask is given and marks its pixel False.  Substitution
    scans the reference order front to back: each unavailable sample takes
    the value of the nearest preceding available one; a leading run with no
    predecessor is back-filled from the first available sample.  When no
    sample is available at all, every entry becomes mid-gray 128.

    Args:
        plane: 2-D luminance image.
        r, c: top-left pixel of the block; the block itself must lie fully
            inside the image (its references need not).
        geometry: block geometry.
        availability: optional boolean mask, same shape as ``plane``;
            False marks pixels that must not be read (e.g. not yet
            reconstructed).

    Returns:
        float64 vector of length 3N+1.
    """
    _check_block_inside(plane, r, c, geometry.block_size)
    h, w = plane.shape
    coords = reference_coords(geometry, r, c)
    m = geometry.ref_len

    values = np.empty(m, dtype=np.float64)
    avail = np.zeros(m, dtype=bool)
    for idx in range(m):
        rr, cc = coords[idx]
        if 0 <= rr < h and 0 <= cc < w:
            if availability is None or availability[rr, cc]:
                values[idx] = plane[rr, cc]
                avail[idx] = True

    if not avail.any():
        values[:] = MID_GRAY
        return values

    first = int(avail.argmax())
    values[:first] = values[first]
    last = values[first]
    for idx in range(first + 1, m):
        if avail[idx]:
            last = values[idx]
        else:
            values[idx] = last
    return values


def extract_block(
    plane: np.ndarray, r: int, c: int, geometry: BlockGeometry
) -> np.ndarray:
    """Row-major copy of the NxN block at (r, c) as a float64 vector."""
    n = geometry.block_size
    _check_block_inside(plane, r, c, n)
    return plane[r : r + n, c : c + n].astype(np.float64).reshape(-1)


@dataclass
class PatchDataset:
    """Paired reference/target columns harvested from training images.

    ``X`` holds one reference vector per column, shape (3N+1, S); ``Y``
    holds the matching target blocks, shape (N*N, S).  ``source_ids``
    records (image id, row, col) for each column.
    """

    geometry: BlockGeometry
    X: np.ndarray
    Y: np.ndarray
    source_ids: list[tuple] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.Y.ndim != 2:
            raise ValueError("X and Y must be 2-D matrices")
        if self.X.shape[0] != self.geometry.ref_len:
            raise ValueError(
                f"X has {self.X.shape[0]} rows, expected {self.geometry.ref_len}"
            )
        if self.Y.shape[0] != self.geometry.block_len:
            raise ValueError(
                f"Y has {self.Y.shape[0]} rows, expected {self.geometry.block_len}"
            )
        if self.X.shape[1] != self.Y.shape[1]:
            raise ValueError("X and Y must have the same number of columns")
        if self.source_ids and len(self.source_ids) != self.X.shape[1]:
            raise ValueError("source_ids length must match the column count")

    @property
    def count(self) -> int:
        return self.X.shape[1]


def merge_datasets(datasets: list[PatchDataset]) -> PatchDataset:
    """Concatenate datasets column-wise; all must share one geometry."""
    if not datasets:
        raise ValueError("need at least one dataset to merge")
    geom = datasets[0].geometry
    for d in datasets[1:]:
        if d.geometry != geom:
            raise ValueError("datasets disagree on block geometry")
    ids: list[tuple] = []
    for d in datasets:
        ids.extend(d.source_ids)
    return PatchDataset(
        geometry=geom,
        X=np.concatenate([d.X for d in datasets], axis=1),
        Y=np.concatenate([d.Y for d in datasets], axis=1),
        source_ids=ids,
    )


def valid_patch_positions(
    plane: np.ndarray, geometry: BlockGeometry
) -> tuple[int, int]:
    """Counts (rows, cols) of block positions whose references all lie
    inside the image: r in [1, H-N], c in [1, W-2N]."""
    h, w = plane.shape
    n = geometry.block_size
    return h - n, w - 2 * n


def sample_patches(
    plane: np.ndarray,
    geometry: BlockGeometry,
    count: int,
    seed: int,
    image_id: object = 0,
) -> PatchDataset:
    """Draw ``count`` training patches uniformly at random, with replacement.

    Only positions where every reference sample lies inside the image are
    eligible, so no substitution ever contaminates training data.  The same
    (plane, geometry, count, seed) always yields the same dataset.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    n_rows, n_cols = valid_patch_positions(plane, geometry)
    if n_rows < 1 or n_cols < 1:
        h, w = plane.shape
        raise ValueError(
            f"image {h}x{w} has no position with fully interior references "
            f"for block size {geometry.block_size}"
        )
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n_rows * n_cols, size=count)
    rows = 1 + idx // n_cols
    cols = 1 + idx % n_cols

    X = np.empty((geometry.ref_len, count), dtype=np.float64)
    Y = np.empty((geometry.block_len, count), dtype=np.float64)
    ids: list[tuple] = []
    for i in range(count):
        r, c = int(rows[i]), int(cols[i])
        X[:, i] = extract_reference(plane, r, c, geometry)
        Y[:, i] = extract_block(plane, r, c, geometry)
        ids.append((image_id, r, c))
    return PatchDataset(geometry=geometry, X=X, Y=Y, source_ids=ids)
