import json
import random
import re
from collections import Counter

import pytest

from vistext import (
    OcrToken,
    SampleMeta,
    Task,
    format_caption,
    format_ie,
    format_nli,
    format_vqa,
    load_templates,
    make_keypoints_sample,
    make_text_reading_sample,
    serialize_reading_order,
    split_position_distribution,
    split_position_weights,
)

PROMPT_PATTERN = re.compile(r"^Human: .* AI:$")


@pytest.fixture(scope="module")
def templates():
    return load_templates()


def token(text, x, y, w=20, h=10):
    return OcrToken(text=text, x=x, y=y, width=w, height=h)


def test_vqa_basic():
    sample = format_vqa("What is the date?", "March 4")
    assert sample.prompt == "Human: What is the date? AI:"
    assert sample.target == "March 4"
    assert sample.task is Task.VQA


def test_vqa_trims_whitespace():
    sample = format_vqa("  Is x shown?  ", " Yes \n")
    assert sample.prompt == "Human: Is x shown? AI:"
    assert sample.target == "Yes"


def test_vqa_rejects_empty():
    with pytest.raises(ValueError):
        format_vqa("", "answer")
    with pytest.raises(ValueError):
        format_vqa("question", "   ")


def test_ie_present_value():
    samples = format_ie([("advertiser", "NBC")])
    assert len(samples) == 1
    assert samples[0].prompt == "Human: What is the value for the advertiser? AI:"
    assert samples[0].target == "NBC"


def test_ie_absent_value_is_none_string():
    samples = format_ie([("gross_amount", None)])
    assert samples[0].target == "None"


def test_ie_preserves_order():
    samples = format_ie([("a", "1"), ("b", None)])
    assert [s.prompt for s in samples] == [
        "Human: What is the value for the a? AI:",
        "Human: What is the value for the b? AI:",
    ]
    assert [s.target for s in samples] == ["1", "None"]


def test_nli_labels():
    yes = format_nli("the total is 5", 1)
    assert yes.prompt == "Human: the total is 5, Yes or No? AI:"
    assert yes.target == "Yes"
    assert format_nli("the total is 5", 0).target == "No"
    with pytest.raises(ValueError):
        format_nli("statement", 2)


def test_caption_deterministic_and_verbatim(templates):
    first = format_caption("a red bus", templates, random.Random(123))
    second = format_caption("a red bus", templates, random.Random(123))
    assert first == second
    assert first.target == "a red bus"
    assert PROMPT_PATTERN.match(first.prompt)


def test_caption_choice_is_roughly_uniform(templates):
    rng = random.Random(99)
    counts = Counter(
        format_caption("c", templates, rng).prompt for _ in range(11_000)
    )
    assert len(counts) == 11
    for n in counts.values():
        assert abs(n / 11_000 - 1 / 11) < 0.01


def test_reading_order_singleton():
    assert serialize_reading_order([token("Hello", 10, 10)]) == "Hello"


def test_reading_order_same_line_sorted_by_x():
    tokens = [token("world", 60, 10), token("Hello", 10, 10)]
    assert serialize_reading_order(tokens) == "Hello world"


def test_reading_order_lines_sorted_by_y():
    tokens = [token("B", 10, 100), token("A", 10, 10)]
    assert serialize_reading_order(tokens) == "A B"


def test_reading_order_multiline_document():
    tokens = [
        token("report", 80, 12),
        token("Annual", 10, 10),
        token("totals", 55, 52),
        token("Revenue", 10, 50),
        token("2024", 150, 11),
    ]
    assert serialize_reading_order(tokens) == "Annual report 2024 Revenue totals"


def test_reading_order_is_permutation():
    rng = random.Random(31)
    texts = [f"w{i}" for i in range(60)]
    tokens = [
        token(t, x=rng.uniform(0, 500), y=rng.uniform(0, 800), w=rng.uniform(5, 40), h=rng.uniform(8, 14))
        for t in texts
    ]
    out = serialize_reading_order(tokens).split()
    assert Counter(out) == Counter(texts)


def test_reading_order_rejects_empty():
    with pytest.raises(ValueError):
        serialize_reading_order([])


def test_split_weights_merge_at_small_length():
    assert split_position_weights(3) == [(0, 6), (1, 2), (2, 2)]
    assert split_position_distribution(6) == [
        (0, 0.5), (1, 0.1), (2, 0.1), (3, 0.1), (4, 0.1), (5, 0.1),
    ]


def test_split_weights_always_total_ten():
    for length in range(1, 40):
        weights = split_position_weights(length)
        assert sum(t for _, t in weights) == 10
        assert weights[0][0] == 0 and weights[0][1] >= 5


def test_text_reading_forced_middle_split(templates):
    words = ["w1", "w2", "w3", "w4", "w5", "w6"]
    sample = make_text_reading_sample(words, templates, random.Random(0), split_position=3)
    assert "w1 w2 w3" in sample.prompt
    assert "w4" not in sample.prompt
    assert sample.target == "w4 w5 w6"
    assert PROMPT_PATTERN.match(sample.prompt)


def test_text_reading_forced_zero_split(templates):
    words = ["alpha", "beta", "gamma"]
    sample = make_text_reading_sample(words, templates, random.Random(0), split_position=0)
    assert sample.target == "alpha beta gamma"
    for word in words:
        assert word not in sample.prompt


def test_text_reading_reconstructs_for_every_split(templates):
    words = [f"tok{i}" for i in range(9)]
    for p in range(len(words)):
        sample = make_text_reading_sample(words, templates, random.Random(p), split_position=p)
        target_words = sample.target.split()
        assert target_words == words[p:]
        if p > 0:
            left = " ".join(words[:p])
            assert left in sample.prompt
            assert words[:p] + target_words == words


def test_text_reading_rejects_bad_input(templates):
    with pytest.raises(ValueError):
        make_text_reading_sample([], templates, random.Random(0))
    with pytest.raises(ValueError):
        make_text_reading_sample(["a"], templates, random.Random(0), split_position=1)


def test_text_reading_deterministic(templates):
    words = ["a", "b", "c", "d", "e", "f", "g"]
    one = make_text_reading_sample(words, templates, random.Random(5))
    two = make_text_reading_sample(words, templates, random.Random(5))
    assert one == two


def test_keypoints_period_handling(templates):
    rng = random.Random(1)
    sample = make_keypoints_sample(["The chart shows revenue."], templates, rng)
    assert sample.target == "The chart shows revenue."
    sample = make_keypoints_sample(["A", "B"], templates, random.Random(1))
    assert sample.target == "A. B."
    assert PROMPT_PATTERN.match(sample.prompt)


def test_keypoints_deterministic(templates):
    one = make_keypoints_sample(["A", "B"], templates, random.Random(3))
    two = make_keypoints_sample(["A", "B"], templates, random.Random(3))
    assert one == two
    with pytest.raises(ValueError):
        make_keypoints_sample([], templates, random.Random(3))


def test_every_builder_prompt_matches_pattern(templates):
    rng = random.Random(8)
    samples = [
        format_vqa("q", "a"),
        *format_ie([("cat", "val"), ("missing", None)]),
        format_nli("s", 1),
        format_caption("cap", templates, rng),
        make_text_reading_sample(["x", "y", "z"], templates, rng),
        make_keypoints_sample(["point"], templates, rng),
    ]
    for sample in samples:
        normalized = " ".join(sample.prompt.split())
        assert PROMPT_PATTERN.match(normalized), sample.prompt


def test_meta_fields_carried():
    meta = SampleMeta(id="d1:4", dataset="docs", image_ref="img/4.png")
    sample = format_vqa("q", "a", meta)
    assert (sample.id, sample.dataset, sample.image_ref) == ("d1:4", "docs", "img/4.png")


def test_template_file_validation(tmp_path):
    bad = tmp_path / "t.json"
    bad.write_text(json.dumps({"read_begin": ["no slot here AI: x."]}), encoding="utf-8")
    with pytest.raises(ValueError):
        load_templates(bad)
    incomplete = {
        "read_begin": ["Human: read. AI: {all texts}."],
        "read_continue_a": ["Human: starts {left texts}."],
        "read_continue_b": ["go on. AI: {right texts}."],
        "key_points": ["Human: points. AI: {key points}."],
    }
    bad.write_text(json.dumps(incomplete), encoding="utf-8")
    with pytest.raises(ValueError):
        load_templates(bad)  # caption list missing


def test_custom_template_file(tmp_path):
    data = {
        "read_begin": ["<Image>Human: read all. AI: {all texts}."],
        "read_continue_a": ["<Image>Human: begins {left texts}."],
        "read_continue_b": ["finish it. AI: {right texts}."],
        "key_points": ["<Image>Human: key facts. AI: {key points}."],
        "caption": ["<Image>Human: describe. AI: {caption}."],
    }
    path = tmp_path / "templates.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    templates = load_templates(path)
    sample = make_text_reading_sample(["a", "b"], templates, random.Random(0), split_position=1)
    assert sample.prompt == "Human: begins a. finish it. AI:"
    assert sample.target == "b"
