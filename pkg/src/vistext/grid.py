"""Grid enumeration and shape-adaptive grid selection.

An image of shape (height, width) is matched against candidate tiling
grids (rows x cols of fixed-size cells). Each candidate is scored with
two IoU terms between rectangles that are centered and aligned with
each other:

* a resolution score comparing the image against the grid's total pixel
  canvas (rows*cell_height, cols*cell_width), and
* an aspect score comparing (cols*height/width, cols) against
  (rows, cols), which depends only on the aspect ratio.

The selected grid maximizes the sum of the two scores. All arithmetic
is double precision; the aspect ratio term computes cols*height first
and divides once, so images that are an exact integer multiple of the
cell size score exactly 1.0 on both terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ImageDims:
    """Pixel dimensions of a source image."""

    height: int
    width: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"image dims must be >= 1, got {self.height}x{self.width}")


@dataclass(frozen=True)
class CellDims:
    """Pixel dimensions of one grid cell (the model's native resolution)."""

    cell_height: int = 224
    cell_width: int = 224

    def __post_init__(self) -> None:
        if self.cell_height < 1 or self.cell_width < 1:
            raise ValueError(
                f"cell dims must be >= 1, got {self.cell_height}x{self.cell_width}"
            )


@dataclass(frozen=True)
class Grid:
    """A tiling candidate: rows x cols of cells."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be >= 1x1, got {self.rows}x{self.cols}")

    @property
    def cells(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class CropConfig:
    """Cropping behaviour: cell size, cell budget, and grid-selection mode.

    adaptive=False is the fixed-grid baseline: every image uses
    ``fixed_grid`` regardless of its shape.
    """

    max_cells: int = 20
    cell: CellDims = field(default_factory=CellDims)
    adaptive: bool = True
    fixed_grid: Grid | None = None
    include_global: bool = True

    def __post_init__(self) -> None:
        if self.max_cells < 1:
            raise ValueError(f"max_cells must be >= 1, got {self.max_cells}")
        if not self.adaptive:
            if self.fixed_grid is None:
                raise ValueError("fixed_grid is required when adaptive=False")
            if self.fixed_grid.cells > self.max_cells:
                raise ValueError(
                    f"fixed_grid {self.fixed_grid.rows}x{self.fixed_grid.cols} "
                    f"exceeds max_cells={self.max_cells}"
                )


@dataclass(frozen=True)
class ScoredGrid:
    """A grid with its two score components and their sum."""

    grid: Grid
    score_rr: float
    score_ra: float
    total: float


def enumerate_grids(max_cells: int) -> list[Grid]:
    """Every (rows, cols) grid with rows*cols <= max_cells.

    Sorted ascending by (cell count, rows, cols); this order defines the
    tie-break used by :func:`select_grid`.
    """
    if max_cells < 1:
        raise ValueError(f"max_cells must be >= 1, got {max_cells}")
    grids = [
        Grid(rows, cols)
        for rows in range(1, max_cells + 1)
        for cols in range(1, max_cells // rows + 1)
    ]
    grids.sort(key=lambda g: (g.cells, g.rows, g.cols))
    return grids


def centered_iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """IoU of two rectangles of dims (h, w), centered and aligned.

    inter = min(h_a, h_b) * min(w_a, w_b); union = area_a + area_b - inter.
    Dimensions may be non-integer but must be positive. Symmetric; equals
    1 iff the rectangles are identical.
    """
    h_a, w_a = a
    h_b, w_b = b
    if h_a <= 0 or w_a <= 0 or h_b <= 0 or w_b <= 0:
        raise ValueError(f"rectangle dims must be positive, got {a} and {b}")
    inter = min(h_a, h_b) * min(w_a, w_b)
    union = h_a * w_a + h_b * w_b - inter
    return inter / union


def score_rr(image: ImageDims, grid: Grid, cell: CellDims) -> float:
    """Resolution score: IoU of the image against the grid's pixel canvas."""
    return centered_iou(
        (image.height, image.width),
        (grid.rows * cell.cell_height, grid.cols * cell.cell_width),
    )


def score_ra(image: ImageDims, grid: Grid) -> float:
    """Aspect score: IoU of (cols*H/W, cols) against (rows, cols).

    Depends only on the image's aspect ratio; equals 1 iff
    H/W == rows/cols. cols*H is computed before the division so the
    equality case is float-exact.
    """
    ratio_rows = (grid.cols * image.height) / image.width
    return centered_iou((ratio_rows, grid.cols), (grid.rows, grid.cols))


def score_grid(image: ImageDims, grid: Grid, cell: CellDims) -> ScoredGrid:
    """Both score components for one candidate grid."""
    rr = score_rr(image, grid, cell)
    ra = score_ra(image, grid)
    return ScoredGrid(grid=grid, score_rr=rr, score_ra=ra, total=rr + ra)


def select_grid(image: ImageDims, config: CropConfig) -> ScoredGrid:
    """The enumerated grid maximizing score_rr + score_ra.

    Ties go to the earliest grid in enumeration order (fewest cells,
    then fewest rows, then fewest cols). Comparison is exact on the
    computed doubles; no epsilon.
    """
    if not config.adaptive:
        raise ValueError("select_grid requires adaptive=True; fixed mode bypasses it")
    best: ScoredGrid | None = None
    for grid in enumerate_grids(config.max_cells):
        scored = score_grid(image, grid, config.cell)
        if best is None or scored.total > best.total:
            best = scored
    assert best is not None  # enumerate_grids always yields (1,1)
    return best
