"""
Building a deterministic training mixture
=========================================

Synthesize two tiny dataset manifests, upsample one of them, and build
the shuffled instruction mixture twice to show byte-level
reproducibility. The shuffle is SplitMix64-driven Fisher-Yates, so a
rebuild with the same seed is identical down to the file digest.
"""

import hashlib
import json
from pathlib import Path

from vistext import CropConfig, DatasetSpec, RunConfig, Task, build_mixture

out_root = Path(__file__).parent / "output" / "mixture"
out_root.mkdir(parents=True, exist_ok=True)

qa_manifest = out_root / "mini_vqa.jsonl"
with open(qa_manifest, "w", encoding="utf-8", newline="\n") as f:
    for i in range(6):
        f.write(json.dumps({
            "id": f"qa{i}", "image": f"img/{i}.png",
            "question": f"what is item {i}?", "answer": f"thing {i}",
        }) + "\n")

reading_manifest = out_root / "mini_reading.jsonl"
with open(reading_manifest, "w", encoding="utf-8", newline="\n") as f:
    for i in range(4):
        f.write(json.dumps({
            "id": f"rd{i}", "image": f"img/r{i}.png",
            "words": [f"line{i}", "alpha", "beta", "gamma", "delta", "epsilon"],
        }) + "\n")

config = RunConfig(
    datasets=(
        DatasetSpec(name="mini_vqa", manifest_path=str(qa_manifest), task=Task.VQA, upsample=2),
        DatasetSpec(name="mini_reading", manifest_path=str(reading_manifest), task=Task.TEXT_READING),
    ),
    crop=CropConfig(),
    seed=2024,
    output_dir=str(out_root / "run_a"),
)

result = build_mixture(config)
print(f"built {result.total} samples -> {result.mixture_path}")
print(json.dumps(result.per_dataset, indent=2))

digest_a = hashlib.sha256(result.mixture_path.read_bytes()).hexdigest()

rerun = RunConfig(
    datasets=config.datasets, crop=config.crop, seed=config.seed,
    output_dir=str(out_root / "run_b"),
)
digest_b = hashlib.sha256(build_mixture(rerun).mixture_path.read_bytes()).hexdigest()
print(f"\nrun_a sha256 {digest_a[:16]}...")
print(f"run_b sha256 {digest_b[:16]}...")
print("byte-identical:", digest_a == digest_b)

print("\nfirst three shuffled rows:")
for line in result.mixture_path.read_text().splitlines()[:3]:
    print(" ", line)
