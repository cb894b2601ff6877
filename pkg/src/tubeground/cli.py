"""Command-line entry point; each pipeline stage is a subcommand.

Exit codes: 0 success, 1 data error or nothing to process, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

from .config import DENOISE_STRATEGIES, PipelineConfig
from .core import ConfigurationError, DataError, TemporalSpan, TubegroundError, merge_frames
from .curriculum import CongestionRecord, cgs_stage_assignment, congestion, satcl_stage_assignment
from .evaluation import (
    TrimSide,
    evaluate,
    format_table,
    shift_classify,
    shift_report,
    upper_bound_detection,
    upper_bound_tubelet,
)
from .fixtures import TRAJECTORY_KINDS, FixtureSpec, generate_fixture
from .grounding import InferenceMode, ScorerKind, ground
from .io import (
    annotation_from_dict,
    load_records,
    prediction_from_dict,
    prediction_to_dict,
    query_from_dict,
    rounded,
    span_from_dict,
    stage_plan_records,
    trm_span_from_dict,
    tubelet_from_dict,
    tubelet_to_dict,
    video_detection_from_dict,
    video_from_dict,
    write_json,
    write_jsonl,
)
from .pipeline import PipelineInputs, denoise_tubelets, run_pipeline
from .slf import DEFAULT_LEXICON, CategoryLexicon, slf_filter, subject_category
from .tracking import link_detections

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("tubeground")

# flag dest -> (config section or None, field)
_CONFIG_FLAGS: dict[str, tuple[Optional[str], str]] = {
    "detection_stride": (None, "detection_stride"),
    "video_fps": (None, "video_fps"),
    "confidence_floor": (None, "confidence_floor"),
    "scorer": (None, "scorer"),
    "workers": (None, "workers"),
    "iou_min": ("tracker", "iou_min"),
    "max_gap": ("tracker", "max_gap"),
    "min_track_len": ("tracker", "min_track_len"),
    "denoise_strategy": ("denoise", "strategy"),
    "min_duration_s": ("denoise", "min_duration_s"),
    "slf_enabled": ("slf", "enabled"),
    "variability_min": ("slf", "variability_min"),
    "lexicon": ("slf", "lexicon_path"),
    "slf_at_inference": ("slf", "at_inference"),
    "cgs_stages": ("curriculum", "cgs_stages"),
    "cgs_delta": ("curriculum", "cgs_delta"),
    "cgs_direction": ("curriculum", "cgs_direction"),
    "cgs_cumulative": ("curriculum", "cgs_cumulative"),
    "satcl_stages": ("curriculum", "satcl_stages"),
    "satcl_cumulative": ("curriculum", "satcl_cumulative"),
    "congestion_after_slf": ("curriculum", "congestion_after_slf"),
    "t_filt": ("inference", "t_filt"),
    "inference_mode": ("inference", "mode"),
    "fill_stride": ("inference", "fill_stride"),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (overrides --config)")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--detection-stride", type=int)
    g.add_argument("--video-fps", type=float)
    g.add_argument("--confidence-floor", type=float)
    g.add_argument("--scorer", choices=[s.value for s in ScorerKind])
    g.add_argument("--workers", type=int, help="worker processes (also via TUBEGROUND_WORKERS)")
    g.add_argument("--iou-min", type=float)
    g.add_argument("--max-gap", type=int)
    g.add_argument("--min-track-len", type=int)
    g.add_argument("--denoise-strategy", choices=DENOISE_STRATEGIES)
    g.add_argument("--min-duration-s", type=float)
    g.add_argument("--slf", dest="slf_enabled", action=argparse.BooleanOptionalAction)
    g.add_argument("--variability-min", type=float)
    g.add_argument("--lexicon", help="JSON token -> category map")
    g.add_argument("--slf-at-inference", action=argparse.BooleanOptionalAction)
    g.add_argument("--cgs-stages", type=int)
    g.add_argument("--cgs-delta", type=float)
    g.add_argument("--cgs-direction", choices=["high_to_low", "low_to_high"])
    g.add_argument("--cgs-cumulative", action=argparse.BooleanOptionalAction)
    g.add_argument("--satcl-stages", type=int)
    g.add_argument("--satcl-cumulative", action=argparse.BooleanOptionalAction)
    g.add_argument("--congestion-after-slf", action=argparse.BooleanOptionalAction)
    g.add_argument("--t-filt", type=float)
    g.add_argument("--inference-mode", choices=[m.value for m in InferenceMode])
    g.add_argument("--fill-stride", type=int)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file, then the worker env var, then explicit flags."""
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    cfg = cfg.with_workers_from_env()
    data = cfg.to_dict()
    for dest, (section, name) in _CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        (data[section] if section else data)[name] = value
    return PipelineConfig.from_dict(data)


def _lexicon(cfg: PipelineConfig) -> CategoryLexicon:
    if cfg.slf.lexicon_path is None:
        return DEFAULT_LEXICON
    try:
        return CategoryLexicon.from_json(cfg.slf.lexicon_path)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read lexicon: {exc}") from None


def _fps_lookup(videos: Optional[Path], cfg: PipelineConfig) -> Callable[[str], float]:
    fps = {}
    if videos is not None:
        fps = {m.video_id: m.fps_sampled for m in load_records(videos, video_from_dict)}
    return lambda vid: fps.get(vid, cfg.default_fps_sampled)


def _group_tubelets(path: Path) -> dict[str, list]:
    out: dict[str, list] = {}
    for vid, t in load_records(path, tubelet_from_dict):
        out.setdefault(vid, []).append(t)
    return out


def _queries(path: Path) -> dict:
    return {q.video_id: q for q in load_records(path, query_from_dict)}


def _tubelet_rows(groups: dict[str, list]):
    return (tubelet_to_dict(t, vid) for vid in sorted(groups) for t in groups[vid])


def _annotations(path: Path, fps) -> dict:
    recs = load_records(path, lambda d: d)
    try:
        return {str(d["video_id"]): annotation_from_dict(d, fps(str(d["video_id"]))) for d in recs}
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


# --- subcommands --------------------------------------------------------------


def cmd_track(args, cfg) -> int:
    fps = _fps_lookup(args.videos, cfg)
    per_video: dict[str, list] = {}
    for vid, det in load_records(args.detections, video_detection_from_dict):
        per_video.setdefault(vid, []).append(det)
    groups = {}
    for vid in sorted(per_video):
        frames = merge_frames(d for d in per_video[vid] if d.confidence >= cfg.confidence_floor)
        groups[vid] = link_detections(frames, cfg.tracker, fps(vid))
    n = write_jsonl(args.out, _tubelet_rows(groups))
    print(f"{n} tubelets from {len(groups)} videos -> {args.out}")
    return EXIT_OK if n else EXIT_DATA


def cmd_denoise(args, cfg) -> int:
    lex = _lexicon(cfg)
    groups = {vid: denoise_tubelets(ts, cfg, lex) for vid, ts in _group_tubelets(args.tubelets).items()}
    n = write_jsonl(args.out, _tubelet_rows(groups))
    print(f"{n} tubelets after {cfg.denoise.strategy} -> {args.out}")
    return EXIT_OK if n else EXIT_DATA


def cmd_slf(args, cfg) -> int:
    lex = _lexicon(cfg)
    groups = _group_tubelets(args.tubelets)
    queries = _queries(args.queries)
    rows = []
    for vid in sorted(groups):
        if vid not in queries:
            raise DataError(f"{args.tubelets}: video_id {vid!r} has no query")
        subject = queries[vid].subject_phrase
        kept = slf_filter(groups[vid], subject, lex, cfg.slf.variability_min)
        rows.append(
            {
                "video_id": vid,
                "subject_category": subject_category(subject, lex),
                "kept_ids": [t.id for t in kept],
                "status": "ok" if kept else "empty",
            }
        )
    write_jsonl(args.out, rows)
    print(f"filtered {len(rows)} videos -> {args.out}")
    return EXIT_OK if rows else EXIT_DATA


def cmd_congestion(args, cfg) -> int:
    groups = _group_tubelets(args.tubelets)
    if args.slf_kept is not None:
        keep = {r["video_id"]: set(r["kept_ids"]) for r in load_records(args.slf_kept, lambda d: d)}
        groups = {vid: [t for t in ts if t.id in keep.get(vid, ())] for vid, ts in groups.items()}
    rows = []
    for vid in sorted(groups):
        if not groups[vid]:
            log.warning("%s: no tubelets, skipped", vid)
            continue
        rows.append(
            {"video_id": vid, "n_tubelets": len(groups[vid]), "congestion": rounded(congestion(groups[vid]))}
        )
    write_jsonl(args.out, rows)
    print(f"{len(rows)} congestion records -> {args.out}")
    return EXIT_OK if rows else EXIT_DATA


def cmd_stage_cgs(args, cfg) -> int:
    def parse(d):
        return CongestionRecord(str(d["video_id"]), int(d["n_tubelets"]), float(d["congestion"]))

    records = load_records(args.congestion, parse)
    c = cfg.curriculum
    plan = cgs_stage_assignment(records, c.cgs_stages, c.cgs_delta, c.cgs_direction, c.cgs_cumulative)
    write_jsonl(args.out, stage_plan_records(plan))
    print(f"stage sizes {plan.sizes()} -> {args.out}")
    return EXIT_OK if records else EXIT_DATA


def cmd_stage_satcl(args, cfg) -> int:
    queries = load_records(args.queries, query_from_dict)
    c = cfg.curriculum
    plan = satcl_stage_assignment(queries, c.satcl_stages, c.satcl_cumulative)
    write_jsonl(args.out, stage_plan_records(plan))
    for vid, problems in sorted(plan.rejected.items()):
        print(f"rejected {vid}: {'; '.join(problems)}", file=sys.stderr)
    print(f"stage sizes {plan.sizes()} -> {args.out}")
    return EXIT_OK if queries else EXIT_DATA


def cmd_ground(args, cfg) -> int:
    groups = _group_tubelets(args.tubelets)
    queries = _queries(args.queries)
    fps = _fps_lookup(args.videos, cfg)
    trm = {}
    if args.trm_spans is not None:
        for d in load_records(args.trm_spans, lambda d: d):
            vid = str(d["video_id"])
            trm[vid] = trm_span_from_dict(d, fps(vid))[1]
    preds = []
    for vid in sorted(groups):
        if vid not in queries:
            raise DataError(f"{args.tubelets}: video_id {vid!r} has no query")
        ts = groups[vid]
        span = trm.get(vid)
        if span is None:
            first = min(t.span.start for t in ts)
            last = max(t.span.end for t in ts)
            span = TemporalSpan(first, last, ts[0].fps_sampled)
        preds.append(ground(queries[vid], ts, span, cfg.scorer, cfg.inference))
    write_jsonl(args.out, (prediction_to_dict(p) for p in preds))
    print(f"{len(preds)} predictions -> {args.out}")
    return EXIT_OK if preds else EXIT_DATA


def cmd_eval(args, cfg) -> int:
    fps = _fps_lookup(args.videos, cfg)
    preds = load_records(args.predictions, lambda d: prediction_from_dict(d, fps(str(d["video_id"]))))
    anns = _annotations(args.annotations, fps)
    for p in preds:
        if p.video_id not in anns:
            raise DataError(f"{args.predictions}: video_id {p.video_id!r} has no annotation")
    if not preds:
        print("no predictions to evaluate")
        return EXIT_DATA
    result = evaluate(preds, anns)
    table = format_table(result)
    if args.out is not None:
        write_json(
            args.out,
            {
                "corpus": {k: rounded(v) if isinstance(v, float) else v for k, v in result.as_dict().items()},
                "samples": [
                    {"video_id": s.video_id, "tiou": rounded(s.tiou), "viou": rounded(s.viou)}
                    for s in result.samples
                ],
            },
        )
    print(table, end="")
    return EXIT_OK


def cmd_upper_bound(args, cfg) -> int:
    fps = _fps_lookup(args.videos, cfg)
    anns = _annotations(args.annotations, fps)
    groups = _group_tubelets(args.tubelets) if args.tubelets else {}
    frames_by_video: dict[str, list] = {}
    if args.detections is not None:
        for vid, det in load_records(args.detections, video_detection_from_dict):
            if det.confidence >= cfg.confidence_floor:
                frames_by_video.setdefault(vid, []).append(det)
    rows = []
    for vid in sorted(anns):
        row: dict = {"video_id": vid}
        if args.detections is not None:
            row["detection_viou"] = rounded(upper_bound_detection(anns[vid], merge_frames(frames_by_video.get(vid, []))))
        if groups.get(vid):
            tid, v = upper_bound_tubelet(anns[vid], groups[vid])
            row.update(tubelet_id=tid, tubelet_viou=rounded(v))
        rows.append(row)
    write_jsonl(args.out, rows)
    print(f"{len(rows)} upper-bound records -> {args.out}")
    return EXIT_OK if rows else EXIT_DATA


def cmd_shift_analysis(args, cfg) -> int:
    """Records: {video_id?, trim_side, full: span, trimmed: span}."""

    def parse(d):
        return shift_classify(
            span_from_dict(d["full"]), span_from_dict(d["trimmed"]), TrimSide(d["trim_side"]), args.eps
        )

    records = load_records(args.records, parse)
    if not records:
        print("no shift records")
        return EXIT_DATA
    report = shift_report(records)
    if args.out is not None:
        write_json(args.out, report)
    for side, stats in report.items():
        print(
            f"{side:<6} n={stats['n']:<4} incorrect={stats['incorrect_pct']:.1f}% "
            f"wrong-direction={stats['wrong_direction_pct']:.1f}% no-shift={stats['no_shift_pct']:.1f}%"
        )
    return EXIT_OK


def cmd_fixture(args, cfg) -> int:
    try:
        spec = FixtureSpec(
            n_videos=args.n_videos,
            actors_per_video=args.actors,
            n_frames=args.frames,
            trajectory_kinds=tuple(args.kinds),
            label_noise_rate=args.label_noise,
            miss_rate=args.miss_rate,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    paths = generate_fixture(spec).write(args.outdir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_run(args, cfg) -> int:
    inputs = PipelineInputs(
        detections=args.detections,
        queries=args.queries,
        annotations=args.annotations,
        trm_spans=args.trm_spans,
        videos=args.videos,
    )
    summary = run_pipeline(cfg, inputs, args.outdir)
    for name, n in summary.counts.items():
        print(f"{name:<24} {n}")
    for line in summary.manifest["diagnostics"]:
        print(f"note: {line}", file=sys.stderr)
    print(f"status: {summary.status}")
    return EXIT_OK if summary.status == "ok" else EXIT_DATA


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tubeground", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        _add_config_flags(p)
        return p

    p = add("track", cmd_track, "link detections into tubelets")
    p.add_argument("--detections", type=Path, required=True)
    p.add_argument("--videos", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = add("denoise", cmd_denoise, "clean label switches inside tubelets")
    p.add_argument("--tubelets", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("slf", cmd_slf, "soft-label filtering against the query subject")
    p.add_argument("--tubelets", type=Path, required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("congestion", cmd_congestion, "per-video tubelet congestion")
    p.add_argument("--tubelets", type=Path, required=True)
    p.add_argument("--slf-kept", dest="slf_kept", type=Path, help="restrict to tubelets kept by an slf output")
    p.add_argument("--out", type=Path, required=True)

    p = add("stage-cgs", cmd_stage_cgs, "congestion-guided curriculum stages")
    p.add_argument("--congestion", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("stage-satcl", cmd_stage_satcl, "sub-action temporal curriculum stages")
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("ground", cmd_ground, "select one tubelet per query")
    p.add_argument("--tubelets", type=Path, required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--trm-spans", type=Path)
    p.add_argument("--videos", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = add("eval", cmd_eval, "tIoU / vIoU metrics")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--videos", type=Path)
    p.add_argument("--out", type=Path)

    p = add("upper-bound", cmd_upper_bound, "oracle vIoU of detections and tubelets")
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--tubelets", type=Path)
    p.add_argument("--detections", type=Path)
    p.add_argument("--videos", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = add("shift-analysis", cmd_shift_analysis, "direction of temporal shifts after trimming a query")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--eps", type=float, default=0.5, help="midpoint change below this is no shift (frames)")
    p.add_argument("--out", type=Path)

    p = add("fixture", cmd_fixture, "write a synthetic corpus")
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-videos", type=int, default=3)
    p.add_argument("--actors", type=int, default=2)
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--kinds", nargs="+", default=list(TRAJECTORY_KINDS), choices=TRAJECTORY_KINDS)
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--miss-rate", type=float, default=0.0)

    p = add("run", cmd_run, "full pipeline")
    p.add_argument("--detections", type=Path, required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--annotations", type=Path)
    p.add_argument("--trm-spans", type=Path)
    p.add_argument("--videos", type=Path)
    p.add_argument("--outdir", type=Path, required=True)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TubegroundError, KeyError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
