import json

import numpy as np
import pytest

from vistext.cli import main
from vistext.cropping import save_image


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert "vistext" in capsys.readouterr().out


def test_plan_command(tmp_path, capsys):
    dims = tmp_path / "dims.jsonl"
    write_jsonl(dims, [{"height": 448, "width": 224}, {"height": 224, "width": 224}])
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "plan", "--dims", str(dims), "--out", str(out_dir))
    assert code == 0
    summary = json.loads(out)
    assert summary["images"] == 2
    histogram = json.loads((out_dir / "grid_histogram.json").read_text())
    assert histogram["total"] == 2
    assert {"rows": 2, "cols": 1, "count": 1} in histogram["counts"]
    csv_lines = (out_dir / "grid_frequency.csv").read_text().strip().splitlines()
    assert csv_lines[0].startswith("rows\\cols,1,")
    assert len(csv_lines) == 21  # header + rows 1..20
    selections = [
        json.loads(line) for line in (out_dir / "grid_selections.jsonl").read_text().splitlines()
    ]
    assert selections[0]["rows"] == 2 and selections[0]["cols"] == 1
    assert selections[0]["total"] == 2.0


def test_plan_with_image_paths(tmp_path, capsys):
    image = tmp_path / "img.png"
    save_image(np.zeros((64, 32, 3), dtype=np.uint8), image)
    dims = tmp_path / "dims.jsonl"
    write_jsonl(dims, [{"image": str(image)}])
    code, out, _ = run_cli(
        capsys, "plan", "--dims", str(dims), "--out", str(tmp_path / "o"), "--cell", "32x32"
    )
    assert code == 0
    selections = json.loads((tmp_path / "o" / "grid_selections.jsonl").read_text())
    assert (selections["rows"], selections["cols"]) == (2, 1)


def test_crop_command_fixed_grid(tmp_path, capsys):
    rng = np.random.default_rng(0)
    image = tmp_path / "page.png"
    save_image(rng.integers(0, 256, size=(100, 45, 3), dtype=np.uint8), image)
    out_dir = tmp_path / "crops"
    code, out, _ = run_cli(
        capsys,
        "crop", str(image), "--out", str(out_dir), "--fixed-grid", "3x3", "--cell", "32x32",
    )
    assert code == 0
    manifest = json.loads((out_dir / "page_manifest.json").read_text())
    assert list(manifest.keys()) == ["source", "height", "width", "grid", "crops", "global"]
    assert manifest["grid"] == {"rows": 3, "cols": 3}
    assert len(manifest["crops"]) == 9
    pngs = sorted(p.name for p in out_dir.glob("page_r*_c*.png"))
    assert len(pngs) == 9
    assert (out_dir / "page_global.png").exists()


def test_crop_command_adaptive_default(tmp_path, capsys):
    image = tmp_path / "tall.png"
    save_image(np.zeros((64, 32, 3), dtype=np.uint8), image)
    code, out, _ = run_cli(
        capsys, "crop", str(image), "--out", str(tmp_path / "o"), "--cell", "32x32", "--no-global"
    )
    assert code == 0
    manifest = json.loads((tmp_path / "o" / "tall_manifest.json").read_text())
    assert manifest["grid"] == {"rows": 2, "cols": 1}
    assert manifest["global"] is None


def test_build_command_with_seed_override(tmp_path, capsys):
    manifest = tmp_path / "m.jsonl"
    write_jsonl(
        manifest,
        [{"id": "0", "image": "a.png", "question": "q", "answer": "a"}],
    )
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "seed": 1,
                "output_dir": str(tmp_path / "ignored"),
                "datasets": [
                    {"name": "d", "manifest_path": str(manifest), "task": "vqa", "upsample": 3}
                ],
            }
        ),
        encoding="utf-8",
    )
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(
        capsys, "build", "--config", str(config_path), "--seed", "42", "--out", str(out_dir)
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["total"] == 3
    stats = json.loads((out_dir / "mixture_stats.json").read_text())
    assert stats["seed"] == 42
    assert (out_dir / "instructions.jsonl").exists()


def test_readorder_command(tmp_path, capsys):
    tokens_path = tmp_path / "tokens.jsonl"
    write_jsonl(
        tokens_path,
        [
            {
                "id": "page1",
                "tokens": [
                    {"text": "world", "x": 60, "y": 10, "width": 30, "height": 10},
                    {"text": "Hello", "x": 10, "y": 10, "width": 30, "height": 10},
                ],
            }
        ],
    )
    code, out, _ = run_cli(capsys, "readorder", "--tokens", str(tokens_path))
    assert code == 0
    assert json.loads(out) == {"id": "page1", "text": "Hello world"}


def test_eval_command(tmp_path, capsys):
    pred = tmp_path / "pred.jsonl"
    gold = tmp_path / "gold.jsonl"
    write_jsonl(pred, [{"id": "1", "prediction": "hello"}])
    write_jsonl(gold, [{"id": "1", "answers": ["hello"]}])
    report_path = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys,
        "eval", "--metric", "anls", "--pred", str(pred), "--gold", str(gold),
        "--out", str(report_path),
    )
    assert code == 0
    assert json.loads(out) == {"metric": "anls", "value": 1.0, "count": 1}
    assert json.loads(report_path.read_text()) == {"metric": "anls", "value": 1.0, "count": 1}


def test_eval_command_id_mismatch_fails(tmp_path, capsys):
    pred = tmp_path / "pred.jsonl"
    gold = tmp_path / "gold.jsonl"
    write_jsonl(pred, [{"id": "1", "prediction": "hello"}])
    write_jsonl(gold, [{"id": "1", "answers": ["hello"]}, {"id": "2", "answers": ["x"]}])
    code, out, err = run_cli(
        capsys, "eval", "--metric", "anls", "--pred", str(pred), "--gold", str(gold)
    )
    assert code == 1
    assert "'2'" in err


def test_eval_command_rejects_unknown_metric(tmp_path, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["eval", "--metric", "cider", "--pred", "p", "--gold", "g"])
    assert excinfo.value.code == 2


def test_crop_command_missing_file_fails(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "crop", str(tmp_path / "missing.png"), "--out", str(tmp_path / "o")
    )
    assert code == 1
    assert "error:" in err
