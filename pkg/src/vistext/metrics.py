"""Evaluation metrics for text-centric VQA-style predictions.

* ANLS: average normalized Levenshtein similarity with a correctness
  threshold (score drops to 0 once the normalized distance reaches it).
* Relaxed accuracy: exact match for strings, 5% relative tolerance for
  numeric answers.
* Exact accuracy: normalized string equality against any gold answer.
* Key-value F1: micro-averaged over (category, value) pair sets.
* BLEU-1..4: corpus-level, clipped n-gram precision with brevity
  penalty, no smoothing.

Every scorer is a pure function over record lists; per-item scores are
reduced with fixed left-to-right summation so results are reproducible
to the bit.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

DEFAULT_ANLS_THRESHOLD = 0.5
DEFAULT_RELAXED_TOLERANCE = 0.05

_CURRENCY_CHARS = "$€£¥"


@dataclass(frozen=True)
class QARecord:
    """One prediction against one or more acceptable gold answers."""

    id: str
    prediction: str
    gold_answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.gold_answers:
            raise ValueError(f"record {self.id!r} has no gold answers")


@dataclass(frozen=True)
class KVRecord:
    """Predicted and gold (category, value) pair sets for one document."""

    id: str
    predicted_pairs: frozenset[tuple[str, str]]
    gold_pairs: frozenset[tuple[str, str]]


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float
    count: int
    per_item: tuple[tuple[str, float], ...] | None = None

    def to_json(self) -> dict:
        return {"metric": self.metric, "value": self.value, "count": self.count}


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute, all cost 1)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, 1):
        cur = [i]
        for j, ch_b in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ch_a != ch_b)))
        prev = cur
    return prev[-1]


def normalize_answer(text: str) -> str:
    """Lowercase, trim, and collapse inner whitespace."""
    return " ".join(text.lower().split())


def parse_number(text: str) -> float | None:
    """Best-effort numeric parse: strips commas, '%' and currency signs."""
    s = text.strip().replace(",", "")
    s = s.strip(_CURRENCY_CHARS + "% \t")
    if not s:
        return None
    try:
        value = float(s)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _require_records(records: list) -> None:
    if not records:
        raise ValueError("record list must be non-empty")


def anls_similarity(prediction: str, gold: str, threshold: float = DEFAULT_ANLS_THRESHOLD) -> float:
    """1 - normalized edit distance, zeroed when the distance >= threshold.

    Both strings are lowercased and trimmed first; two empty strings
    count as identical.
    """
    a = prediction.strip().lower()
    b = gold.strip().lower()
    longest = max(len(a), len(b))
    nl = levenshtein(a, b) / longest if longest else 0.0
    return 1.0 - nl if nl < threshold else 0.0


def anls(records: list[QARecord], threshold: float = DEFAULT_ANLS_THRESHOLD) -> MetricReport:
    """Average, over records, of the best gold similarity."""
    _require_records(records)
    per_item = [
        (r.id, max(anls_similarity(r.prediction, g, threshold) for g in r.gold_answers))
        for r in records
    ]
    value = sum(score for _, score in per_item) / len(per_item)
    return MetricReport("anls", value, len(per_item), tuple(per_item))


def relaxed_match(prediction: str, gold: str, tolerance: float = DEFAULT_RELAXED_TOLERANCE) -> bool:
    """Numeric answers match within a relative tolerance, strings exactly.

    A gold of exactly 0 requires a prediction of exactly 0 (relative
    tolerance is undefined at 0).
    """
    p = parse_number(prediction)
    g = parse_number(gold)
    if p is not None and g is not None:
        if g == 0:
            return p == 0
        return abs(p - g) <= tolerance * abs(g)
    return prediction.strip().lower() == gold.strip().lower()


def relaxed_accuracy(
    records: list[QARecord], tolerance: float = DEFAULT_RELAXED_TOLERANCE
) -> MetricReport:
    """Fraction of records whose prediction relaxed-matches any gold."""
    _require_records(records)
    per_item = [
        (r.id, 1.0 if any(relaxed_match(r.prediction, g, tolerance) for g in r.gold_answers) else 0.0)
        for r in records
    ]
    value = sum(score for _, score in per_item) / len(per_item)
    return MetricReport("relaxed_accuracy", value, len(per_item), tuple(per_item))


def exact_accuracy(records: list[QARecord]) -> MetricReport:
    """Fraction of records whose normalized prediction equals any normalized gold."""
    _require_records(records)
    per_item = [
        (
            r.id,
            1.0
            if normalize_answer(r.prediction) in {normalize_answer(g) for g in r.gold_answers}
            else 0.0,
        )
        for r in records
    ]
    value = sum(score for _, score in per_item) / len(per_item)
    return MetricReport("accuracy", value, len(per_item), tuple(per_item))


def _normalize_pairs(pairs: frozenset[tuple[str, str]]) -> set[tuple[str, str]]:
    return {(normalize_answer(c), normalize_answer(v)) for c, v in pairs}


def kv_f1(records: list[KVRecord]) -> MetricReport:
    """Micro-averaged F1 over (category, value) pairs, all records pooled.

    Pairs are compared after the same normalization as exact accuracy.
    An empty corpus of predictions against an empty corpus of golds is a
    perfect match.
    """
    _require_records(records)
    matched = predicted = gold = 0
    for r in records:
        pred_pairs = _normalize_pairs(r.predicted_pairs)
        gold_pairs = _normalize_pairs(r.gold_pairs)
        matched += len(pred_pairs & gold_pairs)
        predicted += len(pred_pairs)
        gold += len(gold_pairs)
    if predicted == 0 and gold == 0:
        return MetricReport("kv_f1", 1.0, len(records))
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricReport("kv_f1", f1, len(records))


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[str], references: list[str], max_n: int = 4) -> list[MetricReport]:
    """Corpus BLEU-1..max_n over whitespace tokens, one reference each.

    Modified n-gram precision clips each candidate n-gram count at its
    reference count; BLEU-k is the geometric mean of precisions 1..k
    times the brevity penalty exp(1 - r/c) (applied when c < r). No
    smoothing: a zero precision at any order zeroes that order's score.
    """
    if len(candidates) != len(references):
        raise ValueError(
            f"candidate/reference length mismatch: {len(candidates)} vs {len(references)}"
        )
    if not 1 <= max_n <= 4:
        raise ValueError(f"max_n must be in 1..4, got {max_n}")
    _require_records(candidates)

    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_tokens = cand.split()
        ref_tokens = ref.split()
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_n + 1):
            cand_counts = _ngram_counts(cand_tokens, n)
            ref_counts = _ngram_counts(ref_tokens, n)
            matches[n - 1] += sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
            totals[n - 1] += max(len(cand_tokens) - n + 1, 0)

    if cand_len == 0:
        brevity = 0.0
    elif cand_len < ref_len:
        brevity = math.exp(1.0 - ref_len / cand_len)
    else:
        brevity = 1.0
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]

    reports = []
    for k in range(1, max_n + 1):
        head = precisions[:k]
        if any(p == 0.0 for p in head):
            score = 0.0
        else:
            score = brevity * math.prod(head) ** (1.0 / k)
        reports.append(MetricReport(f"bleu{k}", score, len(candidates)))
    return reports


# ---------------------------------------------------------------------------
# JSONL file schemas

def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
    return rows


def load_predictions(path: str | Path) -> dict[str, str]:
    """Prediction JSONL: {"id": str, "prediction": str} per line."""
    out: dict[str, str] = {}
    for row in _read_jsonl(path):
        if "id" not in row or "prediction" not in row:
            raise ValueError(f"{path}: prediction rows need 'id' and 'prediction' keys")
        out[str(row["id"])] = str(row["prediction"])
    return out


def load_prediction_pairs(path: str | Path) -> dict[str, frozenset[tuple[str, str]]]:
    """Pair-prediction JSONL: {"id": str, "pairs": [[category, value], ...]}."""
    out: dict[str, frozenset[tuple[str, str]]] = {}
    for row in _read_jsonl(path):
        if "id" not in row or "pairs" not in row:
            raise ValueError(f"{path}: pair rows need 'id' and 'pairs' keys")
        out[str(row["id"])] = frozenset((str(c), str(v)) for c, v in row["pairs"])
    return out


def load_gold(path: str | Path) -> dict[str, list[str] | frozenset[tuple[str, str]]]:
    """Gold JSONL: rows carry either "answers": [str] or "pairs": [[str, str]]."""
    out: dict[str, list[str] | frozenset[tuple[str, str]]] = {}
    for row in _read_jsonl(path):
        if "id" not in row:
            raise ValueError(f"{path}: gold rows need an 'id' key")
        if "answers" in row:
            out[str(row["id"])] = [str(a) for a in row["answers"]]
        elif "pairs" in row:
            out[str(row["id"])] = frozenset((str(c), str(v)) for c, v in row["pairs"])
        else:
            raise ValueError(f"{path}: gold rows need 'answers' or 'pairs'")
    return out
