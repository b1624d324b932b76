"""
Instruction samples for every task family
=========================================

One sample of each kind, printed as the JSONL rows the mixture builder
would emit. Prompts end with the "AI:" marker; targets live separately.
"""

import json
import random

from vistext import (
    OcrToken,
    SampleMeta,
    format_caption,
    format_ie,
    format_nli,
    format_vqa,
    load_templates,
    make_keypoints_sample,
    make_text_reading_sample,
    serialize_reading_order,
)

templates = load_templates()
rng = random.Random(11)
meta = SampleMeta(id="demo", dataset="playground", image_ref="img/demo.png")

# OCR boxes for a tiny receipt; reading order is top-down, left-right
tokens = [
    OcrToken("TOTAL", x=10, y=80, width=50, height=12),
    OcrToken("$12.40", x=90, y=81, width=48, height=12),
    OcrToken("Corner", x=10, y=10, width=55, height=14),
    OcrToken("Cafe", x=75, y=11, width=40, height=14),
    OcrToken("espresso", x=10, y=45, width=70, height=11),
    OcrToken("x2", x=95, y=46, width=20, height=11),
]
words = serialize_reading_order(tokens).split()
print("reading order:", " ".join(words), "\n")

samples = [
    format_vqa("What is the total?", "$12.40", meta),
    *format_ie([("merchant", "Corner Cafe"), ("tax_amount", None)], meta),
    format_nli("the receipt lists espresso", 1, meta),
    format_caption("a coffee shop receipt", templates, rng, meta),
    make_text_reading_sample(words, templates, rng, meta),          # sampled split
    make_text_reading_sample(words, templates, rng, meta, split_position=3),
    make_keypoints_sample(
        ["The receipt is from Corner Cafe", "Two espressos were ordered."],
        templates, rng, meta,
    ),
]

for sample in samples:
    row = {
        "id": sample.id, "dataset": sample.dataset, "task": sample.task.value,
        "image": sample.image_ref, "prompt": sample.prompt, "target": sample.target,
    }
    print(json.dumps(row, ensure_ascii=False))
