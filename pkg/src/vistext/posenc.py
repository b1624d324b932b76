"""Reference numerics for 2-D crop position encoding.

Each cropped cell (i, j) gets an additive position vector
``row_table[i+1] + col_table[j+1]``; the global view uses the reserved
index 0 in both tables so it never aliases cell (0, 0). The vector is
broadcast over every query slot of that image's feature block, and the
block is flattened cell-major for the language model.

Feature blocks are plain float32 ndarrays of shape
(images, queries, dim); nothing here is trainable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cropping import CropPlan

GLOBAL_INDEX = 0  # reserved row/col table slot for the global image


@dataclass(frozen=True)
class PositionTables:
    """Row and column embedding tables; index 0 is the global slot."""

    row_table: np.ndarray  # (max_rows + 1, dim) float32
    col_table: np.ndarray  # (max_cols + 1, dim) float32

    def __post_init__(self) -> None:
        if self.row_table.ndim != 2 or self.col_table.ndim != 2:
            raise ValueError("position tables must be 2-D")
        if self.row_table.shape[1] != self.col_table.shape[1]:
            raise ValueError(
                f"table dims disagree: {self.row_table.shape[1]} vs {self.col_table.shape[1]}"
            )

    @property
    def dim(self) -> int:
        return self.row_table.shape[1]

    @property
    def max_rows(self) -> int:
        return self.row_table.shape[0] - 1

    @property
    def max_cols(self) -> int:
        return self.col_table.shape[0] - 1


def build_position_tables(
    max_rows: int, max_cols: int, dim: int, seed: int
) -> PositionTables:
    """Seeded normal(0, 0.02) tables of shape (max_rows+1, dim) / (max_cols+1, dim).

    The +1 holds the reserved global slot. Deterministic per seed.
    """
    if max_rows < 1 or max_cols < 1 or dim < 1:
        raise ValueError(
            f"max_rows, max_cols and dim must be >= 1, got {max_rows}, {max_cols}, {dim}"
        )
    rng = np.random.default_rng(seed)
    row = rng.normal(0.0, 0.02, size=(max_rows + 1, dim)).astype(np.float32)
    col = rng.normal(0.0, 0.02, size=(max_cols + 1, dim)).astype(np.float32)
    return PositionTables(row_table=row, col_table=col)


def position_vector(tables: PositionTables, row: int | None, col: int | None) -> np.ndarray:
    """The additive vector for cell (row, col), or the global slot when None."""
    r = GLOBAL_INDEX if row is None else row + 1
    c = GLOBAL_INDEX if col is None else col + 1
    if not (0 <= r < tables.row_table.shape[0] and 0 <= c < tables.col_table.shape[0]):
        raise ValueError(f"cell ({row}, {col}) outside table bounds")
    return tables.row_table[r] + tables.col_table[c]


def encode_positions(
    features: np.ndarray, plan: CropPlan, tables: PositionTables
) -> np.ndarray:
    """Add each image's position vector to all of its query slots.

    ``features`` is (N, queries, dim) with cells in the plan's row-major
    order and the global image (if any) last. Returns a new array of the
    same shape.
    """
    if features.ndim != 3:
        raise ValueError(f"expected (images, queries, dim) features, got {features.shape}")
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    if features.shape[2] != tables.dim:
        raise ValueError(f"feature dim {features.shape[2]} != table dim {tables.dim}")
    if features.shape[0] != plan.image_count:
        raise ValueError(
            f"feature block has {features.shape[0]} images, plan expects {plan.image_count}"
        )
    if plan.grid.rows > tables.max_rows or plan.grid.cols > tables.max_cols:
        raise ValueError(
            f"grid {plan.grid.rows}x{plan.grid.cols} outside table bounds "
            f"{tables.max_rows}x{tables.max_cols}"
        )
    offsets = [position_vector(tables, r.row_index, r.col_index) for r in plan.regions]
    if plan.include_global:
        offsets.append(position_vector(tables, None, None))
    # (N, 1, dim) broadcasts over the query axis
    return features + np.stack(offsets)[:, None, :]


def flatten_sequence(features: np.ndarray) -> np.ndarray:
    """Reshape (N, queries, dim) to (N*queries, dim), cell-major."""
    if features.ndim != 3:
        raise ValueError(f"expected (images, queries, dim) features, got {features.shape}")
    n, q, d = features.shape
    return features.reshape(n * q, d)


def unflatten_sequence(flat: np.ndarray, num_images: int) -> np.ndarray:
    """Inverse of :func:`flatten_sequence` given the image count."""
    if flat.ndim != 2:
        raise ValueError(f"expected (rows, dim) matrix, got {flat.shape}")
    rows, d = flat.shape
    if num_images < 1 or rows % num_images != 0:
        raise ValueError(f"{rows} rows do not split into {num_images} images")
    return flat.reshape(num_images, rows // num_images, d)


def write_matrix(matrix: np.ndarray, path: str | Path) -> None:
    """Dump a 2-D matrix as little-endian float32.

    Layout: 16-byte header of two little-endian uint64 (rows, cols),
    then the values row-major. Used for cross-language equality checks.
    """
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {matrix.shape}")
    rows, cols = matrix.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<QQ", rows, cols))
        f.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16:
            raise ValueError(f"truncated matrix header in {path}")
        rows, cols = struct.unpack("<QQ", header)
        data = np.frombuffer(f.read(), dtype="<f4")
    if data.size != rows * cols:
        raise ValueError(f"matrix body has {data.size} values, header says {rows}x{cols}")
    return data.reshape(rows, cols)
