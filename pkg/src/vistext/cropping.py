"""Turning a selected grid into pixels: resize, cut, reassemble.

The source image is resized to (rows*cell_height, cols*cell_width) with
bilinear interpolation and cut into row-major cells. A global view of
the ORIGINAL image, resized to a single cell, is appended when the plan
asks for it.

Bilinear convention (fixed so results are bit-reproducible everywhere):
output pixel centers map to source coordinates via
``src = (dst + 0.5) * (src_size / dst_size) - 0.5``, neighbor indices
are clamped to the image border, weights and accumulation are float64,
and uint8 output rounds half up. Resizing to the source's own size is
an exact identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .grid import CropConfig, Grid, ImageDims, select_grid


@dataclass(frozen=True)
class CropRegion:
    """One cell's rectangle inside the resized image, with its grid index."""

    row_index: int
    col_index: int
    x: int
    y: int
    width: int
    height: int


@dataclass(frozen=True)
class CropPlan:
    """All geometry needed to crop one image: grid, regions, global slot."""

    source: ImageDims
    grid: Grid
    resized: ImageDims
    regions: tuple[CropRegion, ...]
    include_global: bool

    @property
    def image_count(self) -> int:
        return len(self.regions) + (1 if self.include_global else 0)


@dataclass(frozen=True)
class CropSet:
    """Executed plan: per-cell pixel buffers plus the optional global view."""

    locals: tuple[np.ndarray, ...]
    global_img: np.ndarray | None
    plan: CropPlan


def plan_crops(image: ImageDims, config: CropConfig) -> CropPlan:
    """Lay out crop regions for an image under the given config.

    Adaptive mode selects the grid by score; fixed mode uses
    config.fixed_grid. Regions are enumerated row-major:
    (0,0), (0,1), ..., (1,0), ...
    """
    if config.adaptive:
        grid = select_grid(image, config).grid
    else:
        assert config.fixed_grid is not None  # enforced by CropConfig
        grid = config.fixed_grid
    cell = config.cell
    regions = tuple(
        CropRegion(
            row_index=i,
            col_index=j,
            x=j * cell.cell_width,
            y=i * cell.cell_height,
            width=cell.cell_width,
            height=cell.cell_height,
        )
        for i in range(grid.rows)
        for j in range(grid.cols)
    )
    return CropPlan(
        source=image,
        grid=grid,
        resized=ImageDims(grid.rows * cell.cell_height, grid.cols * cell.cell_width),
        regions=regions,
        include_global=config.include_global,
    )


def resize_bilinear(image: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Bilinear resize of an (H, W) or (H, W, C) uint8 image.

    Uses the half-pixel-center, edge-clamped convention described in the
    module docstring. Returns uint8 of shape (out_height, out_width[, C]).
    """
    if image.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {image.dtype}")
    if image.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D image, got shape {image.shape}")
    if out_height < 1 or out_width < 1:
        raise ValueError(f"output dims must be >= 1, got {out_height}x{out_width}")
    src_h, src_w = image.shape[:2]

    def axis_coords(out_size: int, src_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        centers = (np.arange(out_size, dtype=np.float64) + 0.5) * (src_size / out_size) - 0.5
        lo = np.floor(centers)
        frac = centers - lo
        i0 = np.clip(lo, 0, src_size - 1).astype(np.int64)
        i1 = np.clip(lo + 1, 0, src_size - 1).astype(np.int64)
        return i0, i1, frac

    y0, y1, fy = axis_coords(out_height, src_h)
    x0, x1, fx = axis_coords(out_width, src_w)

    img = image.astype(np.float64)
    row0, row1 = img[y0], img[y1]
    fy = fy[:, None] if img.ndim == 2 else fy[:, None, None]
    fx = fx[None, :] if img.ndim == 2 else fx[None, :, None]
    # Same evaluation order as the scalar definition:
    # top = a*(1-fx) + b*fx; bottom = c*(1-fx) + d*fx; out = top*(1-fy) + bottom*fy
    top = row0[:, x0] * (1.0 - fx) + row0[:, x1] * fx
    bottom = row1[:, x0] * (1.0 - fx) + row1[:, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def execute_plan(image: np.ndarray, plan: CropPlan) -> CropSet:
    """Resize per the plan, cut into cells, and build the global view.

    ``image`` must be an (H, W, 3) uint8 buffer matching plan.source.
    The global view is resized from the original image, not from the
    grid-resized intermediate.
    """
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 image, got {image.shape} {image.dtype}")
    if image.shape[0] != plan.source.height or image.shape[1] != plan.source.width:
        raise ValueError(
            f"image dims {image.shape[0]}x{image.shape[1]} do not match "
            f"plan source {plan.source.height}x{plan.source.width}"
        )
    resized = resize_bilinear(image, plan.resized.height, plan.resized.width)
    locals_ = tuple(
        resized[r.y : r.y + r.height, r.x : r.x + r.width].copy() for r in plan.regions
    )
    global_img = None
    if plan.include_global:
        cell_h = plan.regions[0].height
        cell_w = plan.regions[0].width
        global_img = resize_bilinear(image, cell_h, cell_w)
    return CropSet(locals=locals_, global_img=global_img, plan=plan)


def reassemble(crops: CropSet) -> np.ndarray:
    """Paste the local cells back into the full resized canvas.

    Bit-exact inverse of the cutting step in :func:`execute_plan`.
    """
    plan = crops.plan
    if len(crops.locals) != len(plan.regions):
        raise ValueError(
            f"crop set has {len(crops.locals)} locals for {len(plan.regions)} regions"
        )
    canvas = np.zeros((plan.resized.height, plan.resized.width, 3), dtype=np.uint8)
    for region, buf in zip(plan.regions, crops.locals):
        if buf.shape != (region.height, region.width, 3):
            raise ValueError(f"local buffer shape {buf.shape} does not match its region")
        canvas[region.y : region.y + region.height, region.x : region.x + region.width] = buf
    return canvas


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG or JPEG file to an (H, W, 3) uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(array: np.ndarray, path: str | Path) -> None:
    Image.fromarray(array).save(path, format="PNG")


def crop_image_file(
    path: str | Path, config: CropConfig, out_dir: str | Path
) -> dict:
    """Crop one image file to PNGs plus a JSON manifest; returns the manifest.

    Writes ``{stem}_r{i}_c{j}.png`` per cell, ``{stem}_global.png`` when
    the config includes the global view, and ``{stem}_manifest.json``.
    Crop paths inside the manifest are relative to ``out_dir``.
    """
    path = Path(path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image = load_image(path)
    dims = ImageDims(height=image.shape[0], width=image.shape[1])
    plan = plan_crops(dims, config)
    crops = execute_plan(image, plan)

    stem = path.stem
    crop_entries = []
    for region, buf in zip(plan.regions, crops.locals):
        name = f"{stem}_r{region.row_index}_c{region.col_index}.png"
        save_image(buf, out_dir / name)
        crop_entries.append({"row": region.row_index, "col": region.col_index, "path": name})
    global_name = None
    if crops.global_img is not None:
        global_name = f"{stem}_global.png"
        save_image(crops.global_img, out_dir / global_name)

    manifest = {
        "source": str(path),
        "height": dims.height,
        "width": dims.width,
        "grid": {"rows": plan.grid.rows, "cols": plan.grid.cols},
        "crops": crop_entries,
        "global": global_name,
    }
    manifest_path = out_dir / f"{stem}_manifest.json"
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, ensure_ascii=False, indent=2)
        f.write("\n")
    return manifest
