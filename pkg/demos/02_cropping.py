"""
Cropping an image into cells
============================

Build a synthetic "document" with a color gradient, cut it with an
adaptively selected grid, write the cell PNGs plus the JSON manifest,
and verify the paste-back round trip.
"""

from pathlib import Path

import numpy as np

from vistext import (
    CropConfig,
    ImageDims,
    crop_image_file,
    execute_plan,
    plan_crops,
    reassemble,
    resize_bilinear,
)
from vistext.cropping import save_image

out_dir = Path(__file__).parent / "output" / "cropping"
out_dir.mkdir(parents=True, exist_ok=True)

# a 700x400 gradient so every cell looks different
height, width = 700, 400
yy, xx = np.mgrid[0:height, 0:width]
image = np.stack(
    [(yy * 255 // height), (xx * 255 // width), ((yy + xx) * 255 // (height + width))],
    axis=-1,
).astype(np.uint8)

source = out_dir / "gradient.png"
save_image(image, source)

config = CropConfig()
plan = plan_crops(ImageDims(height, width), config)
print(f"{height}x{width} image -> grid {plan.grid.rows}x{plan.grid.cols}, "
      f"resized to {plan.resized.height}x{plan.resized.width}")
print(f"image count including the global view: {plan.image_count}")

crops = execute_plan(image, plan)
resized = resize_bilinear(image, plan.resized.height, plan.resized.width)
assert np.array_equal(reassemble(crops), resized)
print("reassemble(execute_plan(...)) reproduced the resized image bit-exactly")

manifest = crop_image_file(source, config, out_dir)
print(f"wrote {len(manifest['crops'])} cells + global view + manifest under {out_dir}")
