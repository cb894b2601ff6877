"""JSON Lines record formats.

Every stream holds one JSON object per line.  Writers sort keys and use
compact separators so identical records always produce identical bytes.
Frame indices are sampled-frame indices.

Record shapes::

    videos       {video_id, fps_sampled, num_frames?}
    detections   {video_id, frame, box: [x1,y1,x2,y2], confidence, soft_labels, embedding?}
    tubelets     {video_id, id, fps_sampled, detections: [detection without video_id]}
    queries      {video_id, caption, subject_phrase, sub_actions, query_embedding?}
    annotations  {video_id, span: {start, end, fps_sampled?}, boxes: {frame: box}}
    trm spans    {video_id, start, end}
    predictions  {video_id, tubelet_id, span, boxes, scores, fallback}
    stage plans  {stage, member_ids}

``sub_actions`` maps ``"1"``, ``"2"``, ... to lists whose items are either
``{"text", "action_indices"}`` objects or bare strings (no indices).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Optional, TypeVar

from .core import (
    BBox,
    DataError,
    Detection,
    GroundTruthAnnotation,
    QueryRecord,
    SubActionPhrase,
    TemporalSpan,
    Tubelet,
)
from .grounding import Prediction

T = TypeVar("T")

FLOAT_DIGITS = 9


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def rounded(x: float, digits: int = FLOAT_DIGITS) -> float:
    """Round a computed score for output; keeps goldens stable across summation order."""
    r = round(float(x), digits)
    return 0.0 if r == 0 else r


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
            n += 1
    return n


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False))
        fh.write("\n")


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def load_records(path: str | Path, parse: Callable[[dict], T]) -> list[T]:
    """Parse every line, collecting all schema errors before raising."""
    out, errors = [], []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append(parse(obj))
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
            errors.append(f"{path}:{lineno}: {msg}")
    if errors:
        raise DataError("\n".join(errors))
    return out


# --- primitives ---------------------------------------------------------------


def _box(v) -> BBox:
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ValueError(f"box must be a list of 4 numbers, got {v!r}")
    return BBox(*(float(c) for c in v))


def _box_out(b: BBox) -> list[float]:
    return [b.x1, b.y1, b.x2, b.y2]


def _vector(v) -> Optional[tuple[float, ...]]:
    if v is None:
        return None
    return tuple(float(x) for x in v)


def _int(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ValueError(f"{name} must be an integer, got {v!r}")
    return int(v)


def span_to_dict(s: TemporalSpan) -> dict:
    return {"start": s.start, "end": s.end, "fps_sampled": s.fps_sampled}


def span_from_dict(d: dict, fps: float = 5.0) -> TemporalSpan:
    return TemporalSpan(_int(d["start"], "start"), _int(d["end"], "end"), float(d.get("fps_sampled", fps)))


# --- records ------------------------------------------------------------------


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    fps_sampled: float
    num_frames: Optional[int] = None


def video_to_dict(m: VideoMeta) -> dict:
    d = {"video_id": m.video_id, "fps_sampled": m.fps_sampled}
    if m.num_frames is not None:
        d["num_frames"] = m.num_frames
    return d


def video_from_dict(d: dict) -> VideoMeta:
    fps = float(d["fps_sampled"])
    if not (fps > 0 and math.isfinite(fps)):
        raise ValueError(f"fps_sampled must be > 0, got {fps}")
    n = d.get("num_frames")
    return VideoMeta(str(d["video_id"]), fps, None if n is None else _int(n, "num_frames"))


def detection_to_dict(det: Detection, video_id: Optional[str] = None) -> dict:
    d: dict[str, Any] = {
        "frame": det.frame,
        "box": _box_out(det.box),
        "confidence": det.confidence,
        "soft_labels": list(det.soft_labels),
    }
    if det.embedding is not None:
        d["embedding"] = list(det.embedding)
    if video_id is not None:
        d["video_id"] = video_id
    return d


def detection_from_dict(d: dict) -> Detection:
    labels = d["soft_labels"]
    if isinstance(labels, str):
        labels = [labels]
    return Detection(
        frame=_int(d["frame"], "frame"),
        box=_box(d["box"]),
        confidence=float(d["confidence"]),
        soft_labels=tuple(str(x) for x in labels),
        embedding=_vector(d.get("embedding")),
    )


def video_detection_from_dict(d: dict) -> tuple[str, Detection]:
    return str(d["video_id"]), detection_from_dict(d)


def tubelet_to_dict(t: Tubelet, video_id: str) -> dict:
    return {
        "video_id": video_id,
        "id": t.id,
        "fps_sampled": t.fps_sampled,
        "detections": [detection_to_dict(d) for d in t.detections],
    }


def tubelet_from_dict(d: dict, fps: float = 5.0) -> tuple[str, Tubelet]:
    dets = tuple(detection_from_dict(x) for x in d["detections"])
    return str(d["video_id"]), Tubelet(str(d["id"]), dets, float(d.get("fps_sampled", fps)))


def query_to_dict(q: QueryRecord) -> dict:
    subs = {}
    for k, phrases in q.sub_actions.items():
        items = []
        for p in phrases:
            if p.action_indices is None:
                items.append(p.text)
            else:
                items.append({"text": p.text, "action_indices": list(p.action_indices)})
        subs[str(k)] = items
    d: dict[str, Any] = {
        "video_id": q.video_id,
        "caption": q.caption,
        "subject_phrase": q.subject_phrase,
        "sub_actions": subs,
    }
    if q.query_embedding is not None:
        d["query_embedding"] = list(q.query_embedding)
    return d


def query_from_dict(d: dict) -> QueryRecord:
    raw = d.get("sub_actions") or {}
    if not isinstance(raw, dict):
        raise ValueError("sub_actions must be an object keyed by action count")
    subs = {}
    for k, items in raw.items():
        try:
            key = int(k)
        except ValueError:
            raise ValueError(f"sub_actions key {k!r} is not an integer") from None
        phrases = []
        for item in items:
            if isinstance(item, str):
                phrases.append(SubActionPhrase(item))
            else:
                idx = item.get("action_indices")
                phrases.append(SubActionPhrase(str(item["text"]), None if idx is None else tuple(idx)))
        subs[key] = tuple(phrases)
    return QueryRecord(
        video_id=str(d["video_id"]),
        caption=str(d["caption"]),
        subject_phrase=str(d["subject_phrase"]),
        sub_actions=subs,
        query_embedding=_vector(d.get("query_embedding")),
    )


def annotation_to_dict(a: GroundTruthAnnotation) -> dict:
    return {
        "video_id": a.video_id,
        "span": span_to_dict(a.span),
        "boxes": {str(f): _box_out(b) for f, b in a.boxes.items()},
    }


def annotation_from_dict(d: dict, fps: float = 5.0) -> GroundTruthAnnotation:
    return GroundTruthAnnotation(
        video_id=str(d["video_id"]),
        span=span_from_dict(d["span"], fps),
        boxes={_int(int(f), "frame"): _box(b) for f, b in d["boxes"].items()},
    )


def trm_span_to_dict(video_id: str, s: TemporalSpan) -> dict:
    return {"video_id": video_id, "start": s.start, "end": s.end}


def trm_span_from_dict(d: dict, fps: float = 5.0) -> tuple[str, TemporalSpan]:
    return str(d["video_id"]), TemporalSpan(_int(d["start"], "start"), _int(d["end"], "end"), fps)


def prediction_to_dict(p: Prediction) -> dict:
    return {
        "video_id": p.video_id,
        "tubelet_id": p.tubelet_id,
        "span": span_to_dict(p.span),
        "boxes": {str(f): _box_out(b) for f, b in sorted(p.boxes.items())},
        "scores": {k: rounded(v) for k, v in sorted(p.scores.items())},
        "fallback": p.fallback,
    }


def prediction_from_dict(d: dict, fps: float = 5.0) -> Prediction:
    return Prediction(
        video_id=str(d["video_id"]),
        tubelet_id=str(d["tubelet_id"]),
        span=span_from_dict(d["span"], fps),
        boxes={int(f): _box(b) for f, b in d["boxes"].items()},
        scores={k: float(v) for k, v in d.get("scores", {}).items()},
        fallback=bool(d.get("fallback", False)),
    )


def stage_plan_records(plan) -> list[dict]:
    return [{"stage": k, "member_ids": list(m)} for k, m in plan.stages]
