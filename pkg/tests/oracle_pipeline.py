"""Independent reference implementation of the full ``run`` command.

Works on raw JSON dicts, spells every default out literally, and uses the
brute-force helpers from ``oracles`` plus exact rational arithmetic.  It
never imports ``tubeground``; the goldens under ``tests/golden`` are its
output for the committed micro-fixture.
"""
from __future__ import annotations

import hashlib
import json
import string
from fractions import Fraction
from pathlib import Path

from oracles import box_iou_exact, congestion_pairs, nearest_fill, tiou_frames, track_oracle

DEFAULT_CONFIG = {
    "detection_stride": 5,
    "video_fps": 25.0,
    "confidence_floor": 0.4,
    "tracker": {"iou_min": 0.3, "max_gap": 2, "min_track_len": 2},
    "denoise": {"strategy": "switch_dropping", "min_duration_s": 1.0},
    "slf": {"enabled": True, "variability_min": 0.3, "lexicon_path": None, "at_inference": False},
    "curriculum": {
        "cgs_stages": 5,
        "cgs_delta": 0.2,
        "cgs_direction": "high_to_low",
        "cgs_cumulative": True,
        "satcl_stages": 4,
        "satcl_cumulative": True,
        "congestion_after_slf": True,
    },
    "inference": {"t_filt": 0.2, "mode": "filter_and_trim", "fill_stride": 1},
    "scorer": "mean_confidence",
}

CATEGORY = {
    "man": "male",
    "boy": "male",
    "woman": "female",
    "girl": "female",
    "lady": "female",
}


# --- formatting ---------------------------------------------------------------


def _line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _pretty(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _r9(x) -> float:
    v = round(float(x), 9)
    return 0.0 if v == 0 else v


def _read(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


# --- labels -------------------------------------------------------------------


def _tokens(text: str) -> list[str]:
    table = {ord(c): " " for c in string.punctuation}
    return text.lower().translate(table).split()


def canonical_label(det: dict) -> str:
    return " ".join(sorted(set(_tokens(" ".join(det["soft_labels"])))))


def category_of_tokens(tokens) -> str:
    specific = {CATEGORY[t] for t in tokens if t in CATEGORY}
    return specific.pop() if len(specific) == 1 else "neutral"


def first_mode(values: list) -> object:
    best, best_n = None, -1
    for v in values:
        n = values.count(v)
        if n > best_n:
            best, best_n = v, n
    return best


# --- per-video stages ---------------------------------------------------------


def _track(dets: list[dict]) -> list[tuple[str, list[dict]]]:
    frames: dict[int, list[dict]] = {}
    for d in dets:
        frames.setdefault(d["frame"], []).append(d)
    boxes = {f: [tuple(d["box"]) for d in row] for f, row in frames.items()}
    trk = DEFAULT_CONFIG["tracker"]
    every = track_oracle(boxes, trk["iou_min"], trk["max_gap"], 1)
    out = []
    for n, track in enumerate(every):
        if len(track) >= trk["min_track_len"]:
            out.append((f"t{n:04d}", [frames[f][i] for f, i in track]))
    out.sort(key=lambda t: (t[1][0]["frame"], t[0]))
    return out


def _denoise(tubelets):
    out = []
    for tid, dets in tubelets:
        tokens = {tok for d in dets for tok in canonical_label(d).split()}
        specific = {CATEGORY[t] for t in tokens if t in CATEGORY}
        if len(specific) >= 2:
            labels = [canonical_label(d) for d in dets]
            mode = first_mode(labels)
            dets = [d for d, lab in zip(dets, labels) if lab == mode]
        out.append((tid, dets))
    return out


def _slf_keep(tubelets, subject_phrase: str) -> list[str]:
    subject = category_of_tokens(_tokens(subject_phrase))
    if subject == "neutral":
        return [tid for tid, _ in tubelets]
    kept = []
    for tid, dets in tubelets:
        labels = [canonical_label(d) for d in dets]
        ttype = first_mode([category_of_tokens(lab.split()) for lab in labels])
        mode = first_mode(labels)
        frac = Fraction(sum(lab != mode for lab in labels), len(labels))
        if ttype in (subject, "neutral") or frac >= Fraction(3, 10):
            kept.append(tid)
    return kept


def _span(dets) -> tuple[int, int]:
    return dets[0]["frame"], dets[-1]["frame"]


def _contains(a, b) -> bool:
    return a[0] <= b[0] and b[1] <= a[1]


def _ground(tubelets, trm: tuple[int, int]):
    cands = [
        (tid, dets)
        for tid, dets in tubelets
        if _contains(_span(dets), trm) or _contains(trm, _span(dets)) or tiou_frames(_span(dets), trm) > 0.2
    ]
    fallback = not cands
    if fallback:
        cands = list(tubelets)
    scored = []
    for tid, dets in cands:
        filled = nearest_fill({d["frame"]: d for d in dets})
        frames = sorted(filled)
        if not fallback:
            lo, hi = max(frames[0], trm[0]), min(frames[-1], trm[1])
            frames = [f for f in frames if lo <= f <= hi]
        score = sum(Fraction(filled[f]["confidence"]) for f in frames) / len(frames)
        scored.append((tid, frames, {f: filled[f]["box"] for f in frames}, score))
    best_score = max(s[3] for s in scored)
    best = min((s for s in scored if s[3] == best_score), key=lambda s: (s[1][0], s[0]))
    return best, {s[0]: s[3] for s in scored}, fallback


def _viou(frames: list[int], boxes: dict, gt_span, gt_boxes: dict) -> Fraction:
    pred = set(range(frames[0], frames[-1] + 1))
    gt = set(range(gt_span[0], gt_span[1] + 1))
    total = sum((box_iou_exact(boxes[f], gt_boxes[f]) for f in pred & gt), Fraction(0))
    return total / len(pred | gt)


# --- driver -------------------------------------------------------------------


def run_oracle(indir: Path, outdir: Path) -> None:
    indir, outdir = Path(indir), Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {
        "detections": indir / "detections.jsonl",
        "queries": indir / "queries.jsonl",
        "annotations": indir / "annotations.jsonl",
        "trm_spans": indir / "trm_spans.jsonl",
        "videos": indir / "videos.jsonl",
    }
    videos = {v["video_id"]: v for v in _read(files["videos"])}
    queries = {q["video_id"]: q for q in _read(files["queries"])}
    anns = {a["video_id"]: a for a in _read(files["annotations"])}
    trms = {t["video_id"]: t for t in _read(files["trm_spans"])}

    dets: dict[str, list[dict]] = {vid: [] for vid in queries}
    for raw in _read(files["detections"]):
        if raw["confidence"] < DEFAULT_CONFIG["confidence_floor"]:
            continue
        d = {
            "frame": int(raw["frame"]),
            "box": [float(c) for c in raw["box"]],
            "confidence": float(raw["confidence"]),
            "soft_labels": list(raw["soft_labels"]),
        }
        if raw.get("embedding") is not None:
            d["embedding"] = [float(c) for c in raw["embedding"]]
        dets[raw["video_id"]].append(d)

    tub_rows, den_rows, slf_rows, cong_rows, pred_rows, ub_rows = [], [], [], [], [], []
    samples = []
    diagnostics = [f"{vid}: no detections" for vid in sorted(queries) if not dets[vid]]
    for vid in sorted(queries):
        if not dets[vid]:
            continue
        fps = float(videos[vid]["fps_sampled"])
        tubes = _track(dets[vid])
        ann = anns[vid]
        gt_span = (ann["span"]["start"], ann["span"]["end"])
        gt_boxes = {int(f): b for f, b in ann["boxes"].items()}

        by_frame: dict[int, list] = {}
        for d in dets[vid]:
            by_frame.setdefault(d["frame"], []).append(d["box"])
        det_total = sum(
            (max(box_iou_exact(b, gt_boxes[f]) for b in by_frame[f]) for f in gt_boxes if f in by_frame),
            Fraction(0),
        )
        ub = {"video_id": vid, "detection_viou": _r9(det_total / (gt_span[1] - gt_span[0] + 1))}
        if tubes:
            best = None
            for tid, td in tubes:
                filled = nearest_fill({d["frame"]: d["box"] for d in td})
                v = _viou(sorted(filled), filled, gt_span, gt_boxes)
                key = (-v, td[0]["frame"], tid)
                if best is None or key < best[0]:
                    best = (key, tid, v)
            ub.update(tubelet_id=best[1], tubelet_viou=_r9(best[2]))
        ub_rows.append(ub)

        if not tubes:
            diagnostics.append(f"{vid}: no tubelets after tracking")
            continue

        def rows(ts):
            return [{"video_id": vid, "id": tid, "fps_sampled": fps, "detections": td} for tid, td in ts]

        tub_rows += rows(tubes)
        denoised = _denoise(tubes)
        den_rows += rows(denoised)
        kept = _slf_keep(denoised, queries[vid]["subject_phrase"])
        slf_rows.append(
            {
                "video_id": vid,
                "subject_category": category_of_tokens(_tokens(queries[vid]["subject_phrase"])),
                "kept_ids": kept,
                "status": "ok" if kept else "empty",
            }
        )
        pool = [_span(td) for tid, td in denoised if tid in kept]
        if pool:
            cong_rows.append({"video_id": vid, "n_tubelets": len(pool), "congestion": _r9(congestion_pairs(pool))})
        else:
            diagnostics.append(f"{vid}: no tubelets left for congestion")

        trm = (trms[vid]["start"], trms[vid]["end"])
        (tid, frames, boxes, _), scores, fallback = _ground(tubes, trm)
        if fallback:
            diagnostics.append(f"{vid}: no temporal candidates, fell back to all tubelets")
        pred_rows.append(
            {
                "video_id": vid,
                "tubelet_id": tid,
                "span": {"start": frames[0], "end": frames[-1], "fps_sampled": fps},
                "boxes": {str(f): boxes[f] for f in frames},
                "scores": {k: _r9(v) for k, v in scores.items()},
                "fallback": fallback,
            }
        )
        samples.append(
            (
                vid,
                tiou_frames((frames[0], frames[-1]), gt_span),
                _viou(frames, boxes, gt_span, gt_boxes),
            )
        )

    # spatial curriculum, high congestion first, cumulative
    cgs_rows = []
    for k in range(1, 6):
        thr = Fraction(0) if k == 5 else 1 - k * Fraction(1, 5)
        cgs_rows.append(
            {"stage": k, "member_ids": [r["video_id"] for r in cong_rows if Fraction(str(r["congestion"])) >= thr]}
        )

    # temporal curriculum, every phrase of k actions enters at stage min(k, 4)
    keys = []
    for vid in sorted(queries):
        for k, items in queries[vid]["sub_actions"].items():
            for pos, item in enumerate(items):
                k = int(k)
                start = item["action_indices"][0]
                assert item["action_indices"] == list(range(start, start + k)), "fixture has bad indices"
                keys.append((min(k, 4), vid, k, pos))
    satcl_rows = [
        {"stage": s, "member_ids": [f"{v}#{k}#{p}" for v, k, p in sorted(x[1:] for x in keys if x[0] <= s)]}
        for s in range(1, 5)
    ]

    counts = {}

    def put_jsonl(name, recs):
        (outdir / name).write_text("".join(_line(r) for r in recs))
        counts[name] = len(recs)

    put_jsonl("tubelets.jsonl", tub_rows)
    put_jsonl("tubelets_denoised.jsonl", den_rows)
    put_jsonl("slf.jsonl", slf_rows)
    put_jsonl("congestion.jsonl", cong_rows)
    put_jsonl("stages_cgs.jsonl", cgs_rows)
    put_jsonl("stages_satcl.jsonl", satcl_rows)
    put_jsonl("predictions.jsonl", pred_rows)
    put_jsonl("upper_bound.jsonl", ub_rows)

    n = len(samples)
    m_t = sum(Fraction(s[1]) for s in samples) / n
    m_v = sum(s[2] for s in samples) / n
    at = {r: Fraction(sum(s[2] > Fraction(r) for s in samples), n) for r in ("0.1", "0.3", "0.5")}
    corpus = {"m_tIoU": m_t, "m_vIoU": m_v, **{f"vIoU@{r}": v for r, v in at.items()}}
    (outdir / "eval.json").write_text(
        _pretty(
            {
                "corpus": {**{k: _r9(v) for k, v in corpus.items()}, "n": n},
                "samples": [{"video_id": v, "tiou": _r9(t), "viou": _r9(u)} for v, t, u in samples],
            }
        )
    )
    counts["eval.json"] = n
    width = max(len("video_id"), *(len(s[0]) for s in samples))
    lines = [f"{'video_id':<{width}}  {'tIoU':>8}  {'vIoU':>8}"]
    lines += [f"{v:<{width}}  {float(t):>8.4f}  {float(u):>8.4f}" for v, t, u in samples]
    lines.append("")
    lines += [f"{k:<{width}}  {float(v) * 100:>8.2f}" for k, v in corpus.items()]
    lines.append(f"{'n':<{width}}  {n:>8}")
    (outdir / "eval.txt").write_text("\n".join(lines) + "\n")

    blob = json.dumps(DEFAULT_CONFIG, sort_keys=True, separators=(",", ":"))
    manifest = {
        "status": "ok" if pred_rows else "no_data",
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "config": DEFAULT_CONFIG,
        "inputs": {k: hashlib.sha256(p.read_bytes()).hexdigest() for k, p in files.items()},
        "counts": counts,
        "diagnostics": diagnostics,
    }
    (outdir / "manifest.json").write_text(_pretty(manifest))
