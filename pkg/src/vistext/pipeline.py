"""End-to-end orchestration: manifests in, shuffled instruction mixtures out.

Determinism contract: every output (instruction JSONL, stats, grid
statistics, eval reports) is a pure function of (input files, config,
seed). The mixture shuffle is Fisher-Yates driven by SplitMix64
("splitmix64-fy/v1", documented in the README) so other language
implementations can reproduce files byte for byte. Each sample's
template draws come from a private generator seeded by hashing
(seed, dataset, line, repeat), so results do not depend on worker
count or iteration order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .cropping import load_image
from .grid import CellDims, CropConfig, Grid, ImageDims, select_grid
from .instructions import (
    InstructionSample,
    OcrToken,
    SampleMeta,
    Task,
    TemplateSet,
    format_caption,
    format_ie,
    format_nli,
    format_vqa,
    load_templates,
    make_keypoints_sample,
    make_text_reading_sample,
    serialize_reading_order,
)
from .metrics import (
    KVRecord,
    MetricReport,
    QARecord,
    anls,
    bleu,
    exact_accuracy,
    kv_f1,
    load_gold,
    load_prediction_pairs,
    load_predictions,
    relaxed_accuracy,
)

logger = logging.getLogger(__name__)

MIXTURE_FILE = "instructions.jsonl"
STATS_FILE = "mixture_stats.json"
HISTOGRAM_FILE = "grid_histogram.json"
FREQUENCY_CSV_FILE = "grid_frequency.csv"
SELECTIONS_FILE = "grid_selections.jsonl"

MALFORMED_FRACTION_LIMIT = 0.01

SHUFFLE_ALGORITHM = "splitmix64-fy/v1"

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator; the fixed randomness source for shuffling."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def shuffle_in_place(items: list, seed: int) -> None:
    """Fisher-Yates with SplitMix64; index draws are next_uint64() % (i+1)."""
    rng = SplitMix64(seed)
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_uint64() % (i + 1)
        items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    manifest_path: str
    task: Task
    upsample: int = 1

    def __post_init__(self) -> None:
        if self.upsample < 1:
            raise ValueError(f"upsample must be >= 1, got {self.upsample}")


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetSpec, ...]
    crop: CropConfig
    seed: int
    output_dir: str
    templates_path: str | None = None

    def __post_init__(self) -> None:
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError(f"dataset names must be unique, got {names}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _crop_config_from_dict(data: dict) -> CropConfig:
    cell_data = data.get("cell", {})
    fixed = data.get("fixed_grid")
    fixed_grid = None
    if fixed is not None:
        if isinstance(fixed, str):
            fixed_grid = parse_grid_spec(fixed)
        else:
            fixed_grid = Grid(rows=int(fixed["rows"]), cols=int(fixed["cols"]))
    return CropConfig(
        max_cells=int(data.get("max_cells", 20)),
        cell=CellDims(
            cell_height=int(cell_data.get("cell_height", 224)),
            cell_width=int(cell_data.get("cell_width", 224)),
        ),
        adaptive=bool(data.get("adaptive", True)),
        fixed_grid=fixed_grid,
        include_global=bool(data.get("include_global", True)),
    )


def parse_grid_spec(text: str) -> Grid:
    """Parse "RxC" (e.g. "3x3") into a Grid."""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"grid spec must look like '3x3', got {text!r}")
    try:
        return Grid(rows=int(parts[0]), cols=int(parts[1]))
    except ValueError as exc:
        raise ValueError(f"invalid grid spec {text!r}: {exc}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    """Read a JSON run config whose keys mirror the RunConfig fields."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if "seed" not in data:
        raise ValueError(f"{path}: config must set an explicit 'seed'")
    datasets = tuple(
        DatasetSpec(
            name=d["name"],
            manifest_path=d["manifest_path"],
            task=Task(d["task"]),
            upsample=int(d.get("upsample", 1)),
        )
        for d in data.get("datasets", [])
    )
    return RunConfig(
        datasets=datasets,
        crop=_crop_config_from_dict(data.get("crop", {})),
        seed=int(data["seed"]),
        output_dir=data.get("output_dir", "out"),
        templates_path=data.get("templates_path"),
    )


# ---------------------------------------------------------------------------
# Manifest ingestion

@dataclass
class IngestResult:
    records: list[tuple[int, dict]]  # (line number, validated record)
    malformed: list[tuple[int, str]]  # (line number, reason)
    total_lines: int


def _validate_record(record: dict, task: Task) -> str | None:
    """Returns a rejection reason, or None when the record is usable."""
    if not isinstance(record, dict):
        return "record is not a JSON object"
    if "image" not in record:
        return "missing 'image' key"
    required = {
        Task.VQA: ["question", "answer"],
        Task.IE: ["pairs"],
        Task.NLI: ["statement", "label"],
        Task.CAPTION: ["caption"],
        Task.TEXT_READING: [],
        Task.KEY_POINTS: ["key_points"],
    }[task]
    for key in required:
        if key not in record:
            return f"missing {key!r} key"
    if task is Task.TEXT_READING and "words" not in record and "tokens" not in record:
        return "text reading records need 'words' or 'tokens'"
    if task is Task.NLI and record["label"] not in (0, 1):
        return f"label must be 0 or 1, got {record['label']!r}"
    return None


def ingest(spec: DatasetSpec) -> IngestResult:
    """Read and validate a JSONL manifest.

    Malformed lines are collected, not silently dropped; more than 1%
    malformed is a hard failure naming the offending line numbers.
    An empty manifest logs a warning and yields zero records.
    """
    records: list[tuple[int, dict]] = []
    malformed: list[tuple[int, str]] = []
    total = 0
    with open(spec.manifest_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                malformed.append((line_no, f"invalid JSON: {exc.msg}"))
                continue
            reason = _validate_record(record, spec.task)
            if reason is not None:
                malformed.append((line_no, reason))
            else:
                records.append((line_no, record))
    if total == 0:
        logger.warning("manifest %s for dataset %r is empty", spec.manifest_path, spec.name)
    elif len(malformed) / total > MALFORMED_FRACTION_LIMIT:
        lines = ", ".join(f"{n} ({reason})" for n, reason in malformed)
        raise ValueError(
            f"dataset {spec.name!r}: {len(malformed)}/{total} malformed lines "
            f"exceeds the {MALFORMED_FRACTION_LIMIT:.0%} limit: {lines}"
        )
    return IngestResult(records=records, malformed=malformed, total_lines=total)


# ---------------------------------------------------------------------------
# Mixture building

def _sample_rng(seed: int, dataset: str, line_no: int, repeat: int) -> random.Random:
    """Private per-sample generator, independent of processing order."""
    key = f"{seed}/{dataset}/{line_no}/{repeat}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


def build_record_samples(
    record: dict,
    task: Task,
    meta: SampleMeta,
    templates: TemplateSet,
    rng: random.Random,
) -> list[InstructionSample]:
    """Instruction samples for one validated manifest record."""
    if task is Task.VQA:
        return [format_vqa(record["question"], record["answer"], meta)]
    if task is Task.IE:
        pairs = [(c, v) for c, v in record["pairs"]]
        return format_ie(pairs, meta)
    if task is Task.NLI:
        return [format_nli(record["statement"], record["label"], meta)]
    if task is Task.CAPTION:
        return [format_caption(record["caption"], templates, rng, meta)]
    if task is Task.TEXT_READING:
        if "words" in record:
            words = [str(w) for w in record["words"]]
        else:
            tokens = [
                OcrToken(
                    text=str(t["text"]),
                    x=float(t["x"]),
                    y=float(t["y"]),
                    width=float(t["width"]),
                    height=float(t["height"]),
                )
                for t in record["tokens"]
            ]
            words = serialize_reading_order(tokens).split()
        return [make_text_reading_sample(words, templates, rng, meta)]
    if task is Task.KEY_POINTS:
        return [make_keypoints_sample([str(p) for p in record["key_points"]], templates, rng, meta)]
    raise ValueError(f"unsupported task {task!r}")


@dataclass(frozen=True)
class MixtureResult:
    mixture_path: Path
    stats_path: Path
    total: int
    per_dataset: dict[str, dict]


def build_mixture(config: RunConfig) -> MixtureResult:
    """Ingest every dataset, upsample, shuffle, and write the mixture.

    Output is byte-identical across runs with equal (config, seed).
    """
    templates = load_templates(config.templates_path)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries: list[dict] = []
    per_dataset: dict[str, dict] = {}
    for spec in config.datasets:
        ingested = ingest(spec)
        dataset_count = 0
        for repeat in range(spec.upsample):
            for line_no, record in ingested.records:
                base_id = str(record.get("id", f"{spec.name}:{line_no}"))
                sample_id = base_id if repeat == 0 else f"{base_id}#r{repeat}"
                meta = SampleMeta(
                    id=sample_id, dataset=spec.name, image_ref=str(record["image"])
                )
                rng = _sample_rng(config.seed, spec.name, line_no, repeat)
                for sample in build_record_samples(record, spec.task, meta, templates, rng):
                    entries.append(
                        {
                            "id": sample.id,
                            "dataset": sample.dataset,
                            "task": sample.task.value,
                            "image": sample.image_ref,
                            "prompt": sample.prompt,
                            "target": sample.target,
                        }
                    )
                    dataset_count += 1
        per_dataset[spec.name] = {
            "records": len(ingested.records),
            "malformed": len(ingested.malformed),
            "upsample": spec.upsample,
            "samples": dataset_count,
        }

    shuffle_in_place(entries, config.seed)

    mixture_path = out_dir / MIXTURE_FILE
    with open(mixture_path, "w", encoding="utf-8", newline="\n") as f:
        for entry in entries:
            f.write(json.dumps(entry, ensure_ascii=False))
            f.write("\n")

    stats = {
        "total": len(entries),
        "seed": config.seed,
        "shuffle": SHUFFLE_ALGORITHM,
        "datasets": per_dataset,
    }
    stats_path = out_dir / STATS_FILE
    with open(stats_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(stats, f, ensure_ascii=False, indent=2)
        f.write("\n")

    return MixtureResult(
        mixture_path=mixture_path,
        stats_path=stats_path,
        total=len(entries),
        per_dataset=per_dataset,
    )


# ---------------------------------------------------------------------------
# Grid statistics

@dataclass(frozen=True)
class GridHistogram:
    counts: dict[tuple[int, int], int]
    total: int


@dataclass(frozen=True)
class GridSelection:
    dims: ImageDims
    rows: int
    cols: int
    score_rr: float
    score_ra: float
    total: float


def plan_report(dims_list: list[ImageDims], config: CropConfig) -> tuple[GridHistogram, list[GridSelection]]:
    """Select a grid per image; returns the histogram and per-image detail."""
    counts: Counter[tuple[int, int]] = Counter()
    selections: list[GridSelection] = []
    for dims in dims_list:
        if config.adaptive:
            scored = select_grid(dims, config)
            grid, rr, ra, total = scored.grid, scored.score_rr, scored.score_ra, scored.total
        else:
            assert config.fixed_grid is not None
            grid, rr, ra, total = config.fixed_grid, 0.0, 0.0, 0.0
        counts[(grid.rows, grid.cols)] += 1
        selections.append(
            GridSelection(
                dims=dims, rows=grid.rows, cols=grid.cols,
                score_rr=rr, score_ra=ra, total=total,
            )
        )
    return GridHistogram(counts=dict(counts), total=len(dims_list)), selections


def grid_stats(dims_list: list[ImageDims], config: CropConfig) -> GridHistogram:
    """Histogram of selected grids over a stream of image dims."""
    histogram, _ = plan_report(dims_list, config)
    return histogram


def histogram_to_csv(histogram: GridHistogram, max_rows: int, max_cols: int) -> str:
    r"""Counts as a rows x cols CSV matrix (heatmap-ready)."""
    lines = ["rows\\cols," + ",".join(str(c) for c in range(1, max_cols + 1))]
    for r in range(1, max_rows + 1):
        row = [str(r)] + [str(histogram.counts.get((r, c), 0)) for c in range(1, max_cols + 1)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_grid_stats(
    histogram: GridHistogram,
    selections: list[GridSelection],
    config: CropConfig,
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write histogram JSON, frequency CSV, and per-image selections JSONL."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    histogram_path = out_dir / HISTOGRAM_FILE
    payload = {
        "total": histogram.total,
        "counts": [
            {"rows": r, "cols": c, "count": n}
            for (r, c), n in sorted(histogram.counts.items())
        ],
    }
    with open(histogram_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")

    csv_path = out_dir / FREQUENCY_CSV_FILE
    with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(histogram_to_csv(histogram, config.max_cells, config.max_cells))

    selections_path = out_dir / SELECTIONS_FILE
    with open(selections_path, "w", encoding="utf-8", newline="\n") as f:
        for s in selections:
            f.write(
                json.dumps(
                    {
                        "height": s.dims.height,
                        "width": s.dims.width,
                        "rows": s.rows,
                        "cols": s.cols,
                        "score_rr": s.score_rr,
                        "score_ra": s.score_ra,
                        "total": s.total,
                    }
                )
            )
            f.write("\n")

    return {"histogram": histogram_path, "csv": csv_path, "selections": selections_path}


def load_dims_jsonl(path: str | Path) -> list[ImageDims]:
    """Image dims from JSONL rows of {"height", "width"} or {"image": path}."""
    dims: list[ImageDims] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "height" in row and "width" in row:
                dims.append(ImageDims(height=int(row["height"]), width=int(row["width"])))
            elif "image" in row:
                image = load_image(row["image"])
                dims.append(ImageDims(height=image.shape[0], width=image.shape[1]))
            else:
                raise ValueError(f"{path}:{line_no}: rows need 'height'/'width' or 'image'")
    return dims


# ---------------------------------------------------------------------------
# Evaluation dispatch

EVAL_METRICS = ("anls", "relaxed_accuracy", "accuracy", "kv_f1", "bleu1", "bleu2", "bleu3", "bleu4")


def _check_ids(pred_ids: set[str], gold_ids: set[str]) -> None:
    missing = sorted(gold_ids - pred_ids)
    extra = sorted(pred_ids - gold_ids)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"ids missing from predictions: {missing}")
        if extra:
            parts.append(f"ids missing from gold: {extra}")
        raise ValueError("; ".join(parts))


def run_eval(
    metric: str,
    pred_path: str | Path,
    gold_path: str | Path,
    out_path: str | Path | None = None,
) -> MetricReport:
    """Score a prediction file against a gold file and optionally write JSON."""
    if metric == "bleu":
        metric = "bleu4"
    if metric not in EVAL_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {EVAL_METRICS}")

    gold = load_gold(gold_path)
    if metric == "kv_f1":
        pred_pairs = load_prediction_pairs(pred_path)
        _check_ids(set(pred_pairs), set(gold))
        kv_records = []
        for id_, gold_value in gold.items():
            if not isinstance(gold_value, frozenset):
                raise ValueError(f"gold id {id_!r} has answers, but kv_f1 needs pairs")
            kv_records.append(
                KVRecord(id=id_, predicted_pairs=pred_pairs[id_], gold_pairs=gold_value)
            )
        report = kv_f1(kv_records)
    else:
        preds = load_predictions(pred_path)
        _check_ids(set(preds), set(gold))
        answers: dict[str, list[str]] = {}
        for id_, gold_value in gold.items():
            if isinstance(gold_value, frozenset):
                raise ValueError(f"gold id {id_!r} has pairs, but {metric} needs answers")
            if not gold_value:
                raise ValueError(f"gold id {id_!r} has an empty answer list")
            answers[id_] = gold_value
        if metric.startswith("bleu"):
            order = int(metric[-1])
            candidates = [preds[id_] for id_ in answers]
            references = [answers[id_][0] for id_ in answers]
            report = bleu(candidates, references, max_n=order)[order - 1]
        else:
            records = [
                QARecord(id=id_, prediction=preds[id_], gold_answers=tuple(golds))
                for id_, golds in answers.items()
            ]
            scorer = {"anls": anls, "relaxed_accuracy": relaxed_accuracy, "accuracy": exact_accuracy}[metric]
            report = scorer(records)

    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(report.to_json(), f, ensure_ascii=False, indent=2)
            f.write("\n")
    return report
