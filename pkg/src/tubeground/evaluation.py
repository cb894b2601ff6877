"""Grounding metrics, upper-bound oracles and the temporal-shift diagnostic."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .core import BBox, Detection, GroundTruthAnnotation, TemporalSpan, Tubelet, box_iou, temporal_iou
from .grounding import Prediction, _argmax_tubelet, interpolate_tubelet

logger = logging.getLogger(__name__)

RECALL_THRESHOLDS = (0.1, 0.3, 0.5)


def tiou_metric(pred: TemporalSpan, gt: TemporalSpan) -> float:
    return temporal_iou(pred, gt)


def _viou(pred_span: TemporalSpan, pred_boxes: Mapping[int, BBox], gt: GroundTruthAnnotation) -> float:
    lo = max(pred_span.start, gt.span.start)
    hi = min(pred_span.end, gt.span.end)
    union = pred_span.n_frames + gt.span.n_frames - max(0, hi - lo + 1)
    total = 0.0
    missing = []
    for f in range(lo, hi + 1):
        box = pred_boxes.get(f)
        if box is None:
            missing.append(f)
            continue
        total += box_iou(box, gt.boxes[f])
    if missing:
        logger.warning("%s: prediction has no box on %d overlap frame(s), counted as 0", gt.video_id, len(missing))
    return total / union


def viou_metric(pred: Prediction, gt: GroundTruthAnnotation) -> float:
    """Sum of per-frame box IoU over the temporal intersection, over the temporal union."""
    return _viou(pred.span, pred.boxes, gt)


def viou_at_r(vious: Sequence[float], r: float) -> float:
    """Fraction of samples with vIoU strictly greater than ``r``."""
    if not vious:
        raise ValueError("no vIoU values")
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must be in (0, 1), got {r}")
    return sum(v > r for v in vious) / len(vious)


@dataclass(frozen=True)
class SampleScore:
    video_id: str
    tiou: float
    viou: float


@dataclass(frozen=True)
class EvalResult:
    samples: tuple[SampleScore, ...]
    m_tiou: float
    m_viou: float
    viou_at: Mapping[float, float]

    def as_dict(self) -> dict:
        return {
            "m_tIoU": self.m_tiou,
            "m_vIoU": self.m_viou,
            **{f"vIoU@{r}": v for r, v in self.viou_at.items()},
            "n": len(self.samples),
        }


def evaluate(
    predictions: Sequence[Prediction],
    annotations: Mapping[str, GroundTruthAnnotation],
    thresholds: Sequence[float] = RECALL_THRESHOLDS,
) -> EvalResult:
    if not predictions:
        raise ValueError("nothing to evaluate")
    samples = []
    for p in sorted(predictions, key=lambda p: p.video_id):
        gt = annotations[p.video_id]
        samples.append(SampleScore(p.video_id, tiou_metric(p.span, gt.span), viou_metric(p, gt)))
    vious = [s.viou for s in samples]
    n = len(samples)
    return EvalResult(
        samples=tuple(samples),
        m_tiou=sum(s.tiou for s in samples) / n,
        m_viou=sum(vious) / n,
        viou_at={r: viou_at_r(vious, r) for r in sorted(thresholds)},
    )


def format_table(result: EvalResult) -> str:
    rows = [("video_id", "tIoU", "vIoU")]
    rows += [(s.video_id, f"{s.tiou:.4f}", f"{s.viou:.4f}") for s in result.samples]
    width = max(len(r[0]) for r in rows)
    lines = [f"{a:<{width}}  {b:>8}  {c:>8}" for a, b, c in rows]
    lines.append("")
    for key, value in result.as_dict().items():
        lines.append(f"{key:<{width}}  {value:>8}" if key == "n" else f"{key:<{width}}  {value * 100:>8.2f}")
    return "\n".join(lines) + "\n"


# --- upper bounds -------------------------------------------------------------


def upper_bound_detection(gt: GroundTruthAnnotation, frames: Mapping[int, Sequence[Detection]]) -> float:
    """vIoU reachable by picking the best raw detection on every ground-truth frame."""
    total = 0.0
    for f in gt.span.frames():
        dets = frames.get(f, ())
        if dets:
            total += max(box_iou(d.box, gt.boxes[f]) for d in dets)
    return total / gt.span.n_frames


def upper_bound_tubelet(
    gt: GroundTruthAnnotation, tubelets: Sequence[Tubelet], interpolate: bool = True
) -> tuple[str, float]:
    """The tubelet (gap-filled, untrimmed) with the best vIoU against the ground truth."""
    if not tubelets:
        raise ValueError("no tubelets")
    scored = []
    for t in tubelets:
        filled = interpolate_tubelet(t) if interpolate else t
        scored.append((t, _viou(filled.span, filled.boxes(), gt)))
    best, score = _argmax_tubelet(scored)
    return best.id, score


# --- temporal shift diagnostic -----------------------------------------------


class TrimSide(str, Enum):
    START = "start"
    END = "end"


class Shift(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    NONE = "none"


_EXPECTED = {TrimSide.START: Shift.RIGHT, TrimSide.END: Shift.LEFT}


@dataclass(frozen=True)
class ShiftRecord:
    trim_side: TrimSide
    shift: Shift
    delta: float = 0.0

    @property
    def correct(self) -> bool:
        return self.shift is _EXPECTED[self.trim_side]


def shift_classify(
    full_pred: TemporalSpan,
    trimmed_pred: TemporalSpan,
    trim_side: TrimSide | str,
    eps_frames: float = 0.5,
) -> ShiftRecord:
    """Direction in which trimming the query moved the predicted midpoint.

    Dropping the first action should move it right, dropping the last
    action should move it left.
    """
    side = TrimSide(trim_side)
    delta = trimmed_pred.midpoint - full_pred.midpoint
    if abs(delta) < eps_frames:
        shift = Shift.NONE
    elif delta > 0:
        shift = Shift.RIGHT
    else:
        shift = Shift.LEFT
    return ShiftRecord(side, shift, delta)


def shift_report(records: Sequence[ShiftRecord]) -> dict[str, dict[str, float]]:
    """Per trim side: percent incorrect (no-shift counts as incorrect) and
    percent moved the wrong way (no-shift excluded)."""
    if not records:
        raise ValueError("no shift records")
    out = {}
    for side in TrimSide:
        recs = [r for r in records if r.trim_side is side]
        n = len(recs)
        incorrect = sum(not r.correct for r in recs)
        wrong_way = sum(r.shift not in (Shift.NONE, _EXPECTED[side]) for r in recs)
        out[side.value] = {
            "n": n,
            "incorrect_pct": 100 * incorrect / n if n else 0.0,
            "wrong_direction_pct": 100 * wrong_way / n if n else 0.0,
            "no_shift_pct": 100 * sum(r.shift is Shift.NONE for r in recs) / n if n else 0.0,
        }
    return out
