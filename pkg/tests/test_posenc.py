import numpy as np
import pytest

from vistext import (
    CellDims,
    CropConfig,
    Grid,
    ImageDims,
    PositionTables,
    build_position_tables,
    encode_positions,
    flatten_sequence,
    plan_crops,
    read_matrix,
    unflatten_sequence,
    write_matrix,
)


def grid_plan(rows, cols, include_global=True):
    config = CropConfig(
        max_cells=rows * cols,
        cell=CellDims(8, 8),
        adaptive=False,
        fixed_grid=Grid(rows, cols),
        include_global=include_global,
    )
    return plan_crops(ImageDims(rows * 8, cols * 8), config)


def test_tables_deterministic_per_seed():
    a = build_position_tables(4, 5, 16, seed=42)
    b = build_position_tables(4, 5, 16, seed=42)
    assert np.array_equal(a.row_table, b.row_table)
    assert np.array_equal(a.col_table, b.col_table)
    c = build_position_tables(4, 5, 16, seed=43)
    assert not np.array_equal(a.row_table, c.row_table)


def test_tables_shapes():
    tables = build_position_tables(4, 5, 1024, seed=0)
    assert tables.row_table.shape == (5, 1024)  # reserved slot + rows 1..4
    assert tables.col_table.shape == (6, 1024)
    assert tables.dim == 1024


def test_tables_reject_zero_dims():
    with pytest.raises(ValueError):
        build_position_tables(0, 5, 8, seed=0)
    with pytest.raises(ValueError):
        build_position_tables(4, 5, 0, seed=0)


def test_zero_tables_are_identity():
    tables = PositionTables(
        row_table=np.zeros((5, 8), dtype=np.float32),
        col_table=np.zeros((5, 8), dtype=np.float32),
    )
    plan = grid_plan(2, 2)
    features = np.random.default_rng(0).normal(size=(5, 3, 8)).astype(np.float32)
    assert np.array_equal(encode_positions(features, plan, tables), features)


def test_single_cell_hand_computed():
    row = np.zeros((2, 2), dtype=np.float32)
    col = np.zeros((2, 2), dtype=np.float32)
    row[1] = [1.0, 0.0]
    col[1] = [0.0, 1.0]
    tables = PositionTables(row_table=row, col_table=col)
    plan = grid_plan(1, 1, include_global=False)
    out = encode_positions(np.zeros((1, 4, 2), dtype=np.float32), plan, tables)
    assert np.array_equal(out, np.full((1, 4, 2), 1.0, dtype=np.float32))


def test_output_shape_2x2_plus_global():
    tables = build_position_tables(4, 5, 1024, seed=9)
    plan = grid_plan(2, 2)
    features = np.zeros((5, 65, 1024), dtype=np.float32)
    assert encode_positions(features, plan, tables).shape == (5, 65, 1024)


def test_offsets_constant_per_image_and_decomposed():
    # integer-valued float32 arrays keep every sum exact, so the
    # per-image offset can be compared bitwise across query slots
    rng = np.random.default_rng(1)
    tables = PositionTables(
        row_table=rng.integers(-50, 50, size=(4, 16)).astype(np.float32),
        col_table=rng.integers(-50, 50, size=(4, 16)).astype(np.float32),
    )
    plan = grid_plan(2, 2)
    features = rng.integers(-1000, 1000, size=(5, 7, 16)).astype(np.float32)
    out = encode_positions(features, plan, tables)
    deltas = out - features
    for k, region in enumerate(plan.regions):
        expected = tables.row_table[region.row_index + 1] + tables.col_table[region.col_index + 1]
        for q in range(features.shape[1]):
            assert np.array_equal(deltas[k, q], expected)
    global_expected = tables.row_table[0] + tables.col_table[0]
    for q in range(features.shape[1]):
        assert np.array_equal(deltas[4, q], global_expected)


def test_same_row_and_column_share_components():
    tables = build_position_tables(3, 3, 8, seed=6)
    plan = grid_plan(2, 2, include_global=False)
    out = encode_positions(np.zeros((4, 1, 8), dtype=np.float32), plan, tables)
    # cells (0,0) and (0,1) share the row term; (0,0) and (1,0) the column term
    assert np.array_equal(out[0, 0], tables.row_table[1] + tables.col_table[1])
    assert np.array_equal(out[1, 0], tables.row_table[1] + tables.col_table[2])
    assert np.array_equal(out[2, 0], tables.row_table[2] + tables.col_table[1])


def test_encode_rejects_bad_inputs():
    tables = build_position_tables(2, 2, 8, seed=0)
    plan = grid_plan(2, 2)
    with pytest.raises(ValueError):
        encode_positions(np.zeros((4, 3, 8), dtype=np.float32), plan, tables)  # N mismatch
    with pytest.raises(ValueError):
        encode_positions(np.zeros((5, 3, 4), dtype=np.float32), plan, tables)  # dim mismatch
    big_plan = grid_plan(3, 3)
    with pytest.raises(ValueError):
        encode_positions(np.zeros((10, 3, 8), dtype=np.float32), big_plan, tables)  # bounds
    bad = np.zeros((5, 3, 8), dtype=np.float32)
    bad[0, 0, 0] = np.inf
    with pytest.raises(ValueError):
        encode_positions(bad, plan, tables)


def test_flatten_single_block():
    features = np.arange(2 * 3, dtype=np.float32).reshape(1, 2, 3)
    flat = flatten_sequence(features)
    assert flat.shape == (2, 3)
    assert np.array_equal(flat[0], features[0, 0])
    assert np.array_equal(flat[1], features[0, 1])


def test_flatten_row_mapping():
    features = np.random.default_rng(2).normal(size=(5, 65, 12)).astype(np.float32)
    flat = flatten_sequence(features)
    assert flat.shape == (325, 12)
    for k in (0, 2, 4):
        for q in (0, 1, 64):
            assert np.array_equal(flat[k * 65 + q], features[k, q])


def test_flatten_roundtrip():
    rng = np.random.default_rng(3)
    for n, q, d in [(1, 4, 8), (6, 65, 32), (21, 65, 128)]:
        features = rng.normal(size=(n, q, d)).astype(np.float32)
        assert np.array_equal(unflatten_sequence(flatten_sequence(features), n), features)


def test_unflatten_rejects_bad_split():
    with pytest.raises(ValueError):
        unflatten_sequence(np.zeros((7, 4), dtype=np.float32), 2)


def test_matrix_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    matrix = rng.normal(size=(13, 5)).astype(np.float32)
    path = tmp_path / "flat.bin"
    write_matrix(matrix, path)
    raw = path.read_bytes()
    assert len(raw) == 16 + 13 * 5 * 4
    assert int.from_bytes(raw[:8], "little") == 13
    assert int.from_bytes(raw[8:16], "little") == 5
    assert np.array_equal(read_matrix(path), matrix)
