"""End-to-end orchestration: detections and queries in, stage artifacts out.

Per-video work (tracking, denoising, filtering, congestion, grounding,
upper bounds) fans out to a process pool; everything is re-sorted by video
id before it is written, so outputs do not depend on the worker count.
"""
from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import PipelineConfig
from .core import ConfigurationError, DataError, Detection, GroundTruthAnnotation, QueryRecord, TemporalSpan, Tubelet, merge_frames
from .curriculum import CongestionRecord, cgs_stage_assignment, congestion, satcl_stage_assignment
from .denoising import denoise_switch_dropping, switch_addition_partition
from .evaluation import evaluate, format_table, upper_bound_detection, upper_bound_tubelet
from .grounding import Prediction, ground
from .io import (
    VideoMeta,
    annotation_from_dict,
    load_records,
    prediction_to_dict,
    query_from_dict,
    rounded,
    stage_plan_records,
    trm_span_from_dict,
    tubelet_to_dict,
    video_detection_from_dict,
    video_from_dict,
    write_json,
    write_jsonl,
)
from .slf import DEFAULT_LEXICON, CategoryLexicon, slf_filter, subject_category
from .tracking import link_detections

logger = logging.getLogger(__name__)

OUTPUT_FILES = (
    "tubelets.jsonl",
    "tubelets_denoised.jsonl",
    "slf.jsonl",
    "congestion.jsonl",
    "stages_cgs.jsonl",
    "stages_satcl.jsonl",
    "predictions.jsonl",
    "upper_bound.jsonl",
    "eval.json",
    "eval.txt",
    "manifest.json",
)


@dataclass
class PipelineInputs:
    detections: Path
    queries: Path
    annotations: Optional[Path] = None
    trm_spans: Optional[Path] = None
    videos: Optional[Path] = None


@dataclass
class VideoTask:
    video_id: str
    fps: float
    detections: list[Detection]
    query: QueryRecord
    trm_span: Optional[TemporalSpan]
    annotation: Optional[GroundTruthAnnotation]
    num_frames: Optional[int] = None


@dataclass
class VideoResult:
    video_id: str
    tubelets: list[Tubelet] = field(default_factory=list)
    denoised: list[Tubelet] = field(default_factory=list)
    slf_kept: list[str] = field(default_factory=list)
    slf_subject: str = ""
    congestion: Optional[CongestionRecord] = None
    prediction: Optional[Prediction] = None
    upper_bound: Optional[dict] = None
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class RunSummary:
    status: str
    counts: dict[str, int]
    manifest: dict


def denoise_tubelets(tubelets: list[Tubelet], cfg: PipelineConfig, lex: CategoryLexicon) -> list[Tubelet]:
    strategy = cfg.denoise.strategy
    if strategy == "none":
        return list(tubelets)
    if strategy == "switch_dropping":
        return [denoise_switch_dropping(t, lex) for t in tubelets]
    out = []
    for t in tubelets:
        out.extend(switch_addition_partition(t, cfg.denoise.min_duration_s, lex)[0])
    return out


def full_span(task: VideoTask) -> TemporalSpan:
    """Stand-in temporal prediction covering the whole video."""
    if task.num_frames:
        return TemporalSpan(0, task.num_frames - 1, task.fps)
    frames = [d.frame for d in task.detections]
    return TemporalSpan(min(frames), max(frames), task.fps)


def process_video(task: VideoTask, cfg: PipelineConfig, lex: CategoryLexicon = DEFAULT_LEXICON) -> VideoResult:
    res = VideoResult(task.video_id)
    frames = merge_frames(d for d in task.detections if d.confidence >= cfg.confidence_floor)
    res.tubelets = link_detections(frames, cfg.tracker, task.fps)

    if task.annotation is not None:
        ub = {"video_id": task.video_id, "detection_viou": rounded(upper_bound_detection(task.annotation, frames))}
        if res.tubelets:
            tid, v = upper_bound_tubelet(task.annotation, res.tubelets)
            ub.update(tubelet_id=tid, tubelet_viou=rounded(v))
        res.upper_bound = ub

    if not res.tubelets:
        res.diagnostics.append(f"{task.video_id}: no tubelets after tracking")
        return res

    # training-side artifacts
    res.denoised = denoise_tubelets(res.tubelets, cfg, lex)
    res.slf_subject = subject_category(task.query.subject_phrase, lex)
    if cfg.slf.enabled:
        kept = slf_filter(res.denoised, task.query.subject_phrase, lex, cfg.slf.variability_min)
    else:
        kept = list(res.denoised)
    res.slf_kept = [t.id for t in kept]
    pool = kept if cfg.slf.enabled and cfg.curriculum.congestion_after_slf else res.denoised
    if pool:
        res.congestion = CongestionRecord(task.video_id, len(pool), congestion(pool))
    else:
        res.diagnostics.append(f"{task.video_id}: no tubelets left for congestion")

    # inference on the tracked tubelets
    candidates = res.tubelets
    if cfg.slf.at_inference:
        candidates = slf_filter(candidates, task.query.subject_phrase, lex, cfg.slf.variability_min) or candidates
    trm = task.trm_span if task.trm_span is not None else full_span(task)
    res.prediction = ground(task.query, candidates, trm, cfg.scorer, cfg.inference)
    if res.prediction.fallback:
        res.diagnostics.append(f"{task.video_id}: no temporal candidates, fell back to all tubelets")
    return res


def _process_star(args):
    return process_video(*args)


def _file_digest(path: Optional[Path]) -> Optional[str]:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_tasks(inputs: PipelineInputs, cfg: PipelineConfig) -> list[VideoTask]:
    """Parse and cross-check all input files."""
    metas: dict[str, VideoMeta] = {}
    if inputs.videos is not None:
        for m in load_records(inputs.videos, video_from_dict):
            if m.video_id in metas:
                raise DataError(f"{inputs.videos}: duplicate video_id {m.video_id!r}")
            metas[m.video_id] = m

    def fps_of(vid: str) -> float:
        m = metas.get(vid)
        return m.fps_sampled if m else cfg.default_fps_sampled

    def check_known(vid: str, source) -> None:
        if metas and vid not in metas:
            raise DataError(f"{source}: video_id {vid!r} has no metadata record")
        if vid not in queries:
            raise DataError(f"{source}: video_id {vid!r} has no query")

    queries: dict[str, QueryRecord] = {}
    for q in load_records(inputs.queries, query_from_dict):
        if q.video_id in queries:
            raise DataError(f"{inputs.queries}: duplicate query for video_id {q.video_id!r}")
        queries[q.video_id] = q
    for vid in queries:
        if metas and vid not in metas:
            raise DataError(f"{inputs.queries}: video_id {vid!r} has no metadata record")

    dets: dict[str, list[Detection]] = {vid: [] for vid in queries}
    for vid, det in load_records(inputs.detections, video_detection_from_dict):
        check_known(vid, inputs.detections)
        dets[vid].append(det)

    trm: dict[str, TemporalSpan] = {}
    if inputs.trm_spans is not None:
        for obj in load_records(inputs.trm_spans, lambda d: d):
            vid = str(obj.get("video_id"))
            check_known(vid, inputs.trm_spans)
            try:
                trm[vid] = trm_span_from_dict(obj, fps_of(vid))[1]
            except (KeyError, ValueError) as exc:
                raise DataError(f"{inputs.trm_spans}: {vid}: {exc}") from None

    anns: dict[str, GroundTruthAnnotation] = {}
    if inputs.annotations is not None:
        for obj in load_records(inputs.annotations, lambda d: d):
            vid = str(obj.get("video_id"))
            check_known(vid, inputs.annotations)
            try:
                anns[vid] = annotation_from_dict(obj, fps_of(vid))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{inputs.annotations}: {vid}: {exc}") from None
        missing = sorted(set(queries) - set(anns))
        if missing:
            raise DataError(f"{inputs.annotations}: no annotation for video_id {missing[0]!r}")

    tasks = []
    for vid in sorted(queries):
        m = metas.get(vid)
        tasks.append(
            VideoTask(
                video_id=vid,
                fps=fps_of(vid),
                detections=dets[vid],
                query=queries[vid],
                trm_span=trm.get(vid),
                annotation=anns.get(vid),
                num_frames=m.num_frames if m else None,
            )
        )
    return tasks


def run_pipeline(cfg: PipelineConfig, inputs: PipelineInputs, outdir: str | Path) -> RunSummary:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lex = DEFAULT_LEXICON
    if cfg.slf.lexicon_path:
        try:
            lex = CategoryLexicon.from_json(cfg.slf.lexicon_path)
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read lexicon {cfg.slf.lexicon_path}: {exc}") from None

    tasks = load_tasks(inputs, cfg)
    work = [(t, cfg, lex) for t in tasks if t.detections]
    if cfg.workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_process_star, work))
    else:
        results = [process_video(*w) for w in work]
    results.sort(key=lambda r: r.video_id)

    diagnostics = [f"{t.video_id}: no detections" for t in tasks if not t.detections]
    for r in results:
        diagnostics.extend(r.diagnostics)

    counts: dict[str, int] = {}
    counts["tubelets.jsonl"] = write_jsonl(
        outdir / "tubelets.jsonl", (tubelet_to_dict(t, r.video_id) for r in results for t in r.tubelets)
    )
    counts["tubelets_denoised.jsonl"] = write_jsonl(
        outdir / "tubelets_denoised.jsonl", (tubelet_to_dict(t, r.video_id) for r in results for t in r.denoised)
    )
    counts["slf.jsonl"] = write_jsonl(
        outdir / "slf.jsonl",
        (
            {
                "video_id": r.video_id,
                "subject_category": r.slf_subject,
                "kept_ids": r.slf_kept,
                "status": "ok" if r.slf_kept else "empty",
            }
            for r in results
            if r.denoised
        ),
    )
    records = [r.congestion for r in results if r.congestion is not None]
    counts["congestion.jsonl"] = write_jsonl(
        outdir / "congestion.jsonl",
        (
            {"video_id": c.video_id, "n_tubelets": c.n_tubelets, "congestion": rounded(c.congestion)}
            for c in records
        ),
    )

    cur = cfg.curriculum
    cgs = cgs_stage_assignment(
        # stage membership uses the same rounded values that were written out
        [CongestionRecord(c.video_id, c.n_tubelets, rounded(c.congestion)) for c in records],
        cur.cgs_stages,
        cur.cgs_delta,
        cur.cgs_direction,
        cur.cgs_cumulative,
    )
    counts["stages_cgs.jsonl"] = write_jsonl(outdir / "stages_cgs.jsonl", stage_plan_records(cgs))
    satcl = satcl_stage_assignment([t.query for t in tasks], cur.satcl_stages, cur.satcl_cumulative)
    for vid, problems in sorted(satcl.rejected.items()):
        diagnostics.extend(f"{vid}: sub-actions rejected: {p}" for p in problems)
    counts["stages_satcl.jsonl"] = write_jsonl(outdir / "stages_satcl.jsonl", stage_plan_records(satcl))

    predictions = [r.prediction for r in results if r.prediction is not None]
    counts["predictions.jsonl"] = write_jsonl(
        outdir / "predictions.jsonl", (prediction_to_dict(p) for p in predictions)
    )
    counts["upper_bound.jsonl"] = write_jsonl(
        outdir / "upper_bound.jsonl", (r.upper_bound for r in results if r.upper_bound is not None)
    )

    annotations = {t.video_id: t.annotation for t in tasks if t.annotation is not None}
    if annotations and predictions:
        result = evaluate(predictions, annotations)
        report = {
            "corpus": {k: rounded(v) if isinstance(v, float) else v for k, v in result.as_dict().items()},
            "samples": [
                {"video_id": s.video_id, "tiou": rounded(s.tiou), "viou": rounded(s.viou)} for s in result.samples
            ],
        }
        table = format_table(result)
    else:
        report = {"corpus": None, "samples": []}
        table = "no predictions to evaluate\n"
    write_json(outdir / "eval.json", report)
    (outdir / "eval.txt").write_text(table)
    counts["eval.json"] = len(report["samples"])

    status = "ok" if predictions else "no_data"
    manifest = {
        "status": status,
        "config_hash": cfg.config_hash(),
        "config": cfg.effective_dict(),
        "inputs": {
            "detections": _file_digest(inputs.detections),
            "queries": _file_digest(inputs.queries),
            "annotations": _file_digest(inputs.annotations),
            "trm_spans": _file_digest(inputs.trm_spans),
            "videos": _file_digest(inputs.videos),
        },
        "counts": counts,
        "diagnostics": diagnostics,
    }
    write_json(outdir / "manifest.json", manifest)
    return RunSummary(status, counts, manifest)
