"""
Shape-adaptive grid selection
=============================

Score a handful of image shapes against the candidate grids and look at
which tiling wins. The two IoU terms pull in different directions: one
wants the grid's pixel canvas close to the image, the other wants the
grid's aspect ratio close to the image's.
"""

from vistext import CropConfig, ImageDims, enumerate_grids, score_grid, select_grid

config = CropConfig()  # 224x224 cells, budget of 20 cells, adaptive
print(f"{len(enumerate_grids(config.max_cells))} candidate grids with <= {config.max_cells} cells\n")

shapes = [
    ("square scan", ImageDims(224, 224)),
    ("A4 document", ImageDims(3508, 2480)),
    ("wide table", ImageDims(600, 2000)),
    ("tall webpage", ImageDims(4000, 800)),
    ("photo", ImageDims(768, 1024)),
]

for label, dims in shapes:
    best = select_grid(dims, config)
    print(
        f"{label:13s} {dims.height}x{dims.width:<5d} -> grid "
        f"{best.grid.rows}x{best.grid.cols}  (resolution {best.score_rr:.4f} "
        f"+ aspect {best.score_ra:.4f} = {best.total:.4f})"
    )

# full scoreboard for one image: the winner simply tops this table
print("\ntop five grids for the tall webpage:")
dims = ImageDims(4000, 800)
scored = sorted(
    (score_grid(dims, g, config.cell) for g in enumerate_grids(config.max_cells)),
    key=lambda s: s.total,
    reverse=True,
)
for s in scored[:5]:
    print(f"  {s.grid.rows:2d}x{s.grid.cols:<2d} total {s.total:.4f}")
