"""Instruction-sample construction for the unified "Human: ... AI:" format.

Every sample stores the prompt (ending with the "AI:" marker) and the
target separately, so any training framework can join them as it likes.
Builders that draw templates take an explicit ``random.Random``; nothing
touches global RNG state.

Task coverage: VQA, information extraction, NLI, captioning, plus the
two auxiliary tasks — text reading (with a sampled split position) and
key points generation.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

IMAGE_MARKER = "<Image>"
AI_MARKER = "AI:"

# Split-position sampling for text reading: position 0 (read everything)
# gets probability 0.5, the five later positions 0.1 each. Weights are
# kept as integer tenths so the distribution is exact.
SPLIT_FRACTIONS = 6
SPLIT_ZERO_TENTHS = 5
SPLIT_OTHER_TENTHS = 1
SPLIT_TOTAL_TENTHS = 10


class Task(str, Enum):
    VQA = "vqa"
    IE = "ie"
    NLI = "nli"
    CAPTION = "caption"
    TEXT_READING = "text_reading"
    KEY_POINTS = "key_points"


@dataclass(frozen=True)
class SampleMeta:
    """Identity fields carried onto a built sample."""

    id: str = "sample"
    dataset: str = "adhoc"
    image_ref: str = ""


@dataclass(frozen=True)
class InstructionSample:
    """One training record: prompt ends with "AI:", target is separate."""

    id: str
    dataset: str
    task: Task
    image_ref: str
    prompt: str
    target: str

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not self.target:
            raise ValueError("target must be non-empty")
        if "Human:" not in self.prompt:
            raise ValueError("prompt must contain the 'Human:' marker")


@dataclass(frozen=True)
class OcrToken:
    """A recognized text token with its axis-aligned pixel box."""

    text: str
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"token box must have positive dims, got {self.width}x{self.height}")

    @property
    def center_y(self) -> float:
        return self.y + self.height / 2


_REQUIRED_SLOTS = {
    "read_begin": "{all texts}",
    "read_continue_a": "{left texts}",
    "read_continue_b": "{right texts}",
    "key_points": "{key points}",
    "caption": "{caption}",
}


@dataclass(frozen=True)
class TemplateSet:
    """Prompt template lists, one per templated task."""

    read_begin: tuple[str, ...]
    read_continue_a: tuple[str, ...]
    read_continue_b: tuple[str, ...]
    key_points: tuple[str, ...]
    caption: tuple[str, ...]

    def __post_init__(self) -> None:
        for name, slot in _REQUIRED_SLOTS.items():
            templates = getattr(self, name)
            if not templates:
                raise ValueError(f"template list '{name}' must be non-empty")
            for t in templates:
                if slot not in t:
                    raise ValueError(f"template in '{name}' is missing the {slot} slot: {t!r}")


def load_templates(path: str | Path | None = None) -> TemplateSet:
    """Load a template file; None loads the packaged defaults."""
    if path is None:
        raw = resources.files("vistext").joinpath("data/templates.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    data = json.loads(raw)
    missing = set(_REQUIRED_SLOTS) - set(data)
    if missing:
        raise ValueError(f"template file is missing keys: {sorted(missing)}")
    return TemplateSet(**{name: tuple(data[name]) for name in _REQUIRED_SLOTS})


def _prompt_from_template(template: str, substitutions: dict[str, str] | None = None) -> str:
    """Turn a stored template into an emitted prompt.

    Drops the leading image marker, truncates after the final "AI:"
    (the target is stored separately), then fills any slots that belong
    in the prompt, e.g. {left texts}.
    """
    text = template.removeprefix(IMAGE_MARKER)
    idx = text.rfind(AI_MARKER)
    if idx < 0:
        raise ValueError(f"template has no '{AI_MARKER}' marker: {template!r}")
    text = text[: idx + len(AI_MARKER)]
    for slot, value in (substitutions or {}).items():
        text = text.replace(slot, value)
    return text


def format_vqa(question: str, answer: str, meta: SampleMeta | None = None) -> InstructionSample:
    """Question/answer pair in the unified format."""
    meta = meta or SampleMeta()
    question = question.strip()
    answer = answer.strip()
    if not question or not answer:
        raise ValueError("question and answer must be non-empty")
    return InstructionSample(
        id=meta.id,
        dataset=meta.dataset,
        task=Task.VQA,
        image_ref=meta.image_ref,
        prompt=f"Human: {question} AI:",
        target=answer,
    )


def format_ie(
    categories: list[tuple[str, str | None]], meta: SampleMeta | None = None
) -> list[InstructionSample]:
    """One sample per (category, value); absent values target "None"."""
    meta = meta or SampleMeta()
    samples = []
    for category, value in categories:
        category = category.strip()
        if not category:
            raise ValueError("category names must be non-empty")
        target = "None" if value is None else value.strip()
        samples.append(
            InstructionSample(
                id=f"{meta.id}:{category}",
                dataset=meta.dataset,
                task=Task.IE,
                image_ref=meta.image_ref,
                prompt=f"Human: What is the value for the {category}? AI:",
                target=target or "None",
            )
        )
    return samples


def format_nli(statement: str, label: int, meta: SampleMeta | None = None) -> InstructionSample:
    """Entailment statement; raw label 1 means entailed ("Yes")."""
    meta = meta or SampleMeta()
    statement = statement.strip()
    if not statement:
        raise ValueError("statement must be non-empty")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    return InstructionSample(
        id=meta.id,
        dataset=meta.dataset,
        task=Task.NLI,
        image_ref=meta.image_ref,
        prompt=f"Human: {statement}, Yes or No? AI:",
        target="Yes" if label == 1 else "No",
    )


def format_caption(
    caption: str,
    templates: TemplateSet,
    rng: random.Random,
    meta: SampleMeta | None = None,
) -> InstructionSample:
    """Caption with a uniformly drawn prompt template."""
    meta = meta or SampleMeta()
    caption = caption.strip()
    if not caption:
        raise ValueError("caption must be non-empty")
    template = templates.caption[rng.randrange(len(templates.caption))]
    return InstructionSample(
        id=meta.id,
        dataset=meta.dataset,
        task=Task.CAPTION,
        image_ref=meta.image_ref,
        prompt=_prompt_from_template(template),
        target=caption,
    )


def serialize_reading_order(tokens: list[OcrToken]) -> str:
    """Join OCR tokens top-to-bottom, left-to-right.

    Tokens are grouped into lines by vertical center: sorted by center,
    a gap of at least half the median token height starts a new line
    (i.e. lines are the connected components of "centers closer than
    0.5 * median height"). Lines are ordered by mean top-y, tokens
    within a line by x; everything is joined with single spaces.
    """
    if not tokens:
        raise ValueError("token list must be non-empty")
    threshold = 0.5 * statistics.median(t.height for t in tokens)
    by_center = sorted(tokens, key=lambda t: t.center_y)

    lines: list[list[OcrToken]] = [[by_center[0]]]
    for prev, tok in zip(by_center, by_center[1:]):
        if tok.center_y - prev.center_y < threshold:
            lines[-1].append(tok)
        else:
            lines.append([tok])

    lines.sort(key=lambda line: sum(t.y for t in line) / len(line))
    words = [t.text for line in lines for t in sorted(line, key=lambda t: t.x)]
    return " ".join(words)


def split_position_weights(length: int) -> list[tuple[int, int]]:
    """Candidate split positions with integer-tenth weights, merged.

    Positions are floor(k*L/6) for k = 0..5, weighted 5 tenths for k=0
    and 1 tenth otherwise; positions that collide at small L are merged
    with their weights summed, so position 0 always keeps at least 5 of
    the 10 tenths.
    """
    if length < 1:
        raise ValueError("text must contain at least one word")
    merged: dict[int, int] = {}
    for k in range(SPLIT_FRACTIONS):
        pos = k * length // SPLIT_FRACTIONS
        tenths = SPLIT_ZERO_TENTHS if k == 0 else SPLIT_OTHER_TENTHS
        merged[pos] = merged.get(pos, 0) + tenths
    return sorted(merged.items())


def split_position_distribution(length: int) -> list[tuple[int, float]]:
    """Split positions and their probabilities for a text of L words."""
    return [(pos, tenths / SPLIT_TOTAL_TENTHS) for pos, tenths in split_position_weights(length)]


def make_text_reading_sample(
    text_words: list[str],
    templates: TemplateSet,
    rng: random.Random,
    meta: SampleMeta | None = None,
    split_position: int | None = None,
) -> InstructionSample:
    """Read-from-the-beginning or continue-reading sample.

    Draws a split position p (see :func:`split_position_distribution`),
    then a template. p = 0 asks for the whole text; otherwise the first
    p words are embedded in the prompt and the rest are the target.
    ``split_position`` forces p instead of drawing it.
    """
    meta = meta or SampleMeta()
    length = len(text_words)
    if length < 1:
        raise ValueError("text must contain at least one word")

    if split_position is None:
        roll = rng.randrange(SPLIT_TOTAL_TENTHS)
        cumulative = 0
        position = 0
        for pos, tenths in split_position_weights(length):
            cumulative += tenths
            position = pos
            if roll < cumulative:
                break
    else:
        if not 0 <= split_position < length:
            raise ValueError(f"split position {split_position} outside [0, {length})")
        position = split_position

    if position == 0:
        template = templates.read_begin[rng.randrange(len(templates.read_begin))]
        prompt = _prompt_from_template(template)
        target_words = text_words
    else:
        part_a = templates.read_continue_a[rng.randrange(len(templates.read_continue_a))]
        part_b = templates.read_continue_b[rng.randrange(len(templates.read_continue_b))]
        left = " ".join(text_words[:position])
        prompt = _prompt_from_template(part_a + " " + part_b, {"{left texts}": left})
        target_words = text_words[position:]

    return InstructionSample(
        id=meta.id,
        dataset=meta.dataset,
        task=Task.TEXT_READING,
        image_ref=meta.image_ref,
        prompt=prompt,
        target=" ".join(target_words),
    )


def make_keypoints_sample(
    key_points: list[str],
    templates: TemplateSet,
    rng: random.Random,
    meta: SampleMeta | None = None,
) -> InstructionSample:
    """Key-point statements joined into one target, each ending with a period."""
    meta = meta or SampleMeta()
    points = [p.strip() for p in key_points if p.strip()]
    if not points:
        raise ValueError("key point list must be non-empty")
    template = templates.key_points[rng.randrange(len(templates.key_points))]
    target = " ".join(p if p.endswith(".") else p + "." for p in points)
    return InstructionSample(
        id=meta.id,
        dataset=meta.dataset,
        task=Task.KEY_POINTS,
        image_ref=meta.image_ref,
        prompt=_prompt_from_template(template),
        target=target,
    )
