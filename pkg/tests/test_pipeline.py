import dataclasses
import json

import pytest

from conftest import GOLDEN, MICRO
from oracle_pipeline import run_oracle
from tubeground.config import PipelineConfig
from tubeground.core import DataError
from tubeground.fixtures import FixtureSpec, generate_fixture
from tubeground.io import dumps
from tubeground.pipeline import OUTPUT_FILES, PipelineInputs, run_pipeline


def _inputs(d):
    return PipelineInputs(*(d / f"{n}.jsonl" for n in ("detections", "queries", "annotations", "trm_spans", "videos")))


def _same_dirs(a, b):
    for name in OUTPUT_FILES:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_micro_matches_golden(tmp_path, micro_inputs):
    summary = run_pipeline(PipelineConfig(), micro_inputs, tmp_path)
    assert summary.status == "ok"
    _same_dirs(tmp_path, GOLDEN)


@pytest.mark.parametrize("seed", [11, 23, 42, 99])
def test_matches_oracle_on_other_corpora(tmp_path, seed):
    spec = FixtureSpec(n_videos=4, actors_per_video=3, n_frames=18, label_noise_rate=0.25, miss_rate=0.15, seed=seed)
    generate_fixture(spec).write(tmp_path / "in")
    run_pipeline(PipelineConfig(), _inputs(tmp_path / "in"), tmp_path / "out")
    run_oracle(tmp_path / "in", tmp_path / "ref")
    _same_dirs(tmp_path / "out", tmp_path / "ref")


def test_parallel_identical(tmp_path, micro_inputs):
    run_pipeline(PipelineConfig(), micro_inputs, tmp_path / "a")
    run_pipeline(dataclasses.replace(PipelineConfig(), workers=4), micro_inputs, tmp_path / "b")
    _same_dirs(tmp_path / "a", tmp_path / "b")


def test_manifest_contents(tmp_path, micro_inputs):
    run_pipeline(PipelineConfig(), micro_inputs, tmp_path)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config_hash"] == PipelineConfig().config_hash()
    assert m["counts"]["predictions.jsonl"] == 3
    assert str(MICRO) not in json.dumps(m)


def test_empty_detections_is_no_data(tmp_path, micro_inputs):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    summary = run_pipeline(PipelineConfig(), dataclasses.replace(micro_inputs, detections=empty), tmp_path / "out")
    assert summary.status == "no_data"
    assert (tmp_path / "out" / "tubelets.jsonl").read_text() == ""
    assert (tmp_path / "out" / "predictions.jsonl").read_text() == ""


def test_without_trm_spans_uses_whole_video(tmp_path, micro_inputs):
    cfg = PipelineConfig()
    run_pipeline(cfg, dataclasses.replace(micro_inputs, trm_spans=None, annotations=None), tmp_path)
    preds = [json.loads(line) for line in (tmp_path / "predictions.jsonl").read_text().splitlines()]
    assert len(preds) == 3 and not any(p["fallback"] for p in preds)
    assert json.loads((tmp_path / "eval.json").read_text())["corpus"] is None


def test_unknown_video_id_is_fatal(tmp_path, micro_inputs):
    det = tmp_path / "d.jsonl"
    rec = json.loads((MICRO / "detections.jsonl").read_text().splitlines()[0])
    rec["video_id"] = "ghost"
    det.write_text(dumps(rec) + "\n")
    with pytest.raises(DataError, match="ghost"):
        run_pipeline(PipelineConfig(), dataclasses.replace(micro_inputs, detections=det), tmp_path / "o")


def test_schema_errors_carry_line_numbers(tmp_path, micro_inputs):
    q = tmp_path / "q.jsonl"
    lines = (MICRO / "queries.jsonl").read_text().splitlines()
    lines[1] = '{"video_id": "v001"}'
    q.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError, match=r"q.jsonl:2"):
        run_pipeline(PipelineConfig(), dataclasses.replace(micro_inputs, queries=q), tmp_path / "o")


def test_missing_annotation_is_fatal(tmp_path, micro_inputs):
    a = tmp_path / "a.jsonl"
    a.write_text((MICRO / "annotations.jsonl").read_text().splitlines()[0] + "\n")
    with pytest.raises(DataError, match="v001"):
        run_pipeline(PipelineConfig(), dataclasses.replace(micro_inputs, annotations=a), tmp_path / "o")


def test_config_changes_outputs(tmp_path, micro_inputs):
    run_pipeline(PipelineConfig(), micro_inputs, tmp_path / "a")
    cfg = PipelineConfig.from_dict({"denoise": {"strategy": "switch_addition"}, "slf": {"enabled": False}})
    run_pipeline(cfg, micro_inputs, tmp_path / "b")
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["config_hash"] != mb["config_hash"]
    assert (tmp_path / "b" / "tubelets.jsonl").read_bytes() == (tmp_path / "a" / "tubelets.jsonl").read_bytes()
