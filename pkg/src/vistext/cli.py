"""Command line interface: plan, crop, build, readorder, eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .cropping import crop_image_file
from .grid import CellDims, CropConfig
from .instructions import OcrToken, serialize_reading_order
from .pipeline import (
    EVAL_METRICS,
    build_mixture,
    load_dims_jsonl,
    load_run_config,
    parse_grid_spec,
    plan_report,
    run_eval,
    write_grid_stats,
)


def _parse_cell_spec(text: str) -> CellDims:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"cell spec must look like '224x224', got {text!r}")
    return CellDims(cell_height=int(parts[0]), cell_width=int(parts[1]))


def _add_crop_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run config JSON (crop section supplies defaults)")
    parser.add_argument("--max-cells", type=int, default=None, help="cell budget (default 20)")
    parser.add_argument("--cell", default=None, help="cell dims as HxW (default 224x224)")
    parser.add_argument("--fixed-grid", default=None, help="fixed grid RxC; disables adaptive selection")
    parser.add_argument("--no-global", action="store_true", help="skip the resized global image")


def _resolve_crop_config(args: argparse.Namespace) -> CropConfig:
    base = CropConfig()
    if args.config:
        base = load_run_config(args.config).crop
    fixed_grid = base.fixed_grid
    adaptive = base.adaptive
    if args.fixed_grid:
        fixed_grid = parse_grid_spec(args.fixed_grid)
        adaptive = False
    return CropConfig(
        max_cells=args.max_cells if args.max_cells is not None else base.max_cells,
        cell=_parse_cell_spec(args.cell) if args.cell else base.cell,
        adaptive=adaptive,
        fixed_grid=fixed_grid,
        include_global=False if args.no_global else base.include_global,
    )


def _cmd_plan(args: argparse.Namespace) -> int:
    config = _resolve_crop_config(args)
    dims = load_dims_jsonl(args.dims)
    histogram, selections = plan_report(dims, config)
    paths = write_grid_stats(histogram, selections, config, args.out)
    print(
        json.dumps(
            {
                "images": histogram.total,
                "distinct_grids": len(histogram.counts),
                "histogram": str(paths["histogram"]),
                "csv": str(paths["csv"]),
                "selections": str(paths["selections"]),
            }
        )
    )
    return 0


def _cmd_crop(args: argparse.Namespace) -> int:
    config = _resolve_crop_config(args)
    manifests = []
    for image_path in args.images:
        manifest = crop_image_file(image_path, config, args.out)
        manifests.append(manifest)
    print(
        json.dumps(
            {
                "images": len(manifests),
                "out_dir": str(Path(args.out)),
                "manifests": [f"{Path(m['source']).stem}_manifest.json" for m in manifests],
            }
        )
    )
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = type(config)(
            datasets=config.datasets,
            crop=config.crop,
            seed=args.seed,
            output_dir=config.output_dir,
            templates_path=config.templates_path,
        )
    if args.out is not None:
        config = type(config)(
            datasets=config.datasets,
            crop=config.crop,
            seed=config.seed,
            output_dir=args.out,
            templates_path=config.templates_path,
        )
    result = build_mixture(config)
    print(
        json.dumps(
            {
                "total": result.total,
                "mixture": str(result.mixture_path),
                "stats": str(result.stats_path),
            }
        )
    )
    return 0


def _cmd_readorder(args: argparse.Namespace) -> int:
    out_lines = []
    with open(args.tokens, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            tokens = [
                OcrToken(
                    text=str(t["text"]),
                    x=float(t["x"]),
                    y=float(t["y"]),
                    width=float(t["width"]),
                    height=float(t["height"]),
                )
                for t in row["tokens"]
            ]
            out_lines.append(
                json.dumps(
                    {"id": row.get("id", str(line_no)), "text": serialize_reading_order(tokens)},
                    ensure_ascii=False,
                )
            )
    text = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    report = run_eval(args.metric, args.pred, args.gold, args.out)
    print(json.dumps(report.to_json()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vistext",
        description="Shape-adaptive cropping, instruction building, and evaluation tools",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="grid-selection statistics for a set of image dims")
    plan.add_argument("--dims", required=True, help="JSONL of {height,width} or {image} rows")
    plan.add_argument("--out", required=True, help="output directory")
    _add_crop_flags(plan)
    plan.set_defaults(func=_cmd_plan)

    crop = sub.add_parser("crop", help="crop images to cell PNGs plus manifests")
    crop.add_argument("images", nargs="+", help="PNG or JPEG files")
    crop.add_argument("--out", required=True, help="output directory")
    _add_crop_flags(crop)
    crop.set_defaults(func=_cmd_crop)

    build = sub.add_parser("build", help="build a shuffled instruction mixture")
    build.add_argument("--config", required=True, help="run config JSON")
    build.add_argument("--seed", type=int, default=None, help="override the config seed")
    build.add_argument("--out", default=None, help="override the config output_dir")
    build.set_defaults(func=_cmd_build)

    readorder = sub.add_parser("readorder", help="serialize OCR tokens in reading order")
    readorder.add_argument("--tokens", required=True, help="JSONL of {id, tokens} rows")
    readorder.add_argument("--out", default=None, help="output JSONL (default stdout)")
    readorder.set_defaults(func=_cmd_readorder)

    ev = sub.add_parser("eval", help="score predictions against gold answers")
    ev.add_argument("--metric", required=True, choices=EVAL_METRICS + ("bleu",))
    ev.add_argument("--pred", required=True, help="prediction JSONL")
    ev.add_argument("--gold", required=True, help="gold JSONL")
    ev.add_argument("--out", default=None, help="write the report JSON here")
    ev.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
