"""
Crop position encoding
======================

Each cell's feature block receives row embedding + column embedding,
broadcast across its query vectors; the global view uses the reserved
index 0. Afterwards the block flattens into one (N*queries, dim)
sequence for the language model.
"""

import numpy as np

from vistext import (
    CellDims,
    CropConfig,
    Grid,
    ImageDims,
    build_position_tables,
    encode_positions,
    flatten_sequence,
    plan_crops,
    unflatten_sequence,
)

queries, dim = 65, 1024
plan = plan_crops(
    ImageDims(2 * 224, 2 * 224),
    CropConfig(max_cells=20, cell=CellDims(224, 224), adaptive=False, fixed_grid=Grid(2, 2)),
)
print(f"grid {plan.grid.rows}x{plan.grid.cols} + global -> {plan.image_count} feature blocks")

tables = build_position_tables(max_rows=4, max_cols=5, dim=dim, seed=7)
features = np.random.default_rng(0).normal(size=(plan.image_count, queries, dim)).astype(np.float32)

encoded = encode_positions(features, plan, tables)
print(f"encoded shape unchanged: {encoded.shape}")

# the added offset decomposes into row embedding + column embedding
# (recovered up to float32 rounding, since delta = (f + e) - f)
delta = encoded - features
cell_01_offset = tables.row_table[1] + tables.col_table[2]
print("cell (0,1) offset matches row[1] + col[2]:",
      bool(np.allclose(delta[1], cell_01_offset, atol=1e-6)))
print("global view offset matches the reserved slot:",
      bool(np.allclose(delta[-1], tables.row_table[0] + tables.col_table[0], atol=1e-6)))

flat = flatten_sequence(encoded)
print(f"flattened to {flat.shape[0]} rows of dim {flat.shape[1]}")
assert np.array_equal(unflatten_sequence(flat, plan.image_count), encoded)
print("unflatten(flatten(x)) == x")
