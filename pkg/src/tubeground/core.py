"""Domain types and the IoU primitives shared by every stage."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence


class TubegroundError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TubegroundError, ValueError):
    """Invalid parameters or incompatible inputs (CLI exit status 2)."""


class DataError(TubegroundError, ValueError):
    """Malformed or inconsistent input records (CLI exit status 1)."""


class InvalidSampleError(DataError):
    """A sample cannot be processed, e.g. a video without tubelets."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in corner format, pixel coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) and c >= 0 for c in coords):
            raise DataError(f"box coordinates must be finite and >= 0: {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise DataError(f"degenerate box: {coords}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class TemporalSpan:
    """Inclusive range of sampled-frame indices."""

    start: int
    end: int
    fps_sampled: float = 5.0

    def __post_init__(self):
        if self.start > self.end:
            raise DataError(f"span start {self.start} > end {self.end}")
        if not (self.fps_sampled > 0 and math.isfinite(self.fps_sampled)):
            raise ConfigurationError(f"fps_sampled must be > 0, got {self.fps_sampled}")

    @property
    def n_frames(self) -> int:
        return self.end - self.start + 1

    @property
    def duration_seconds(self) -> float:
        return self.n_frames / self.fps_sampled

    @property
    def midpoint(self) -> float:
        return (self.start + self.end) / 2

    def frames(self) -> range:
        return range(self.start, self.end + 1)

    def contains(self, other: TemporalSpan) -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: TemporalSpan) -> bool:
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BBox
    confidence: float
    soft_labels: tuple[str, ...]
    embedding: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.frame < 0:
            raise DataError(f"negative frame index {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise DataError(f"confidence {self.confidence} outside [0, 1]")
        if isinstance(self.soft_labels, str):
            object.__setattr__(self, "soft_labels", (self.soft_labels,))
        else:
            object.__setattr__(self, "soft_labels", tuple(self.soft_labels))
        if not self.soft_labels or not all(self.soft_labels):
            raise DataError("detection needs at least one non-empty soft label")
        if self.embedding is not None:
            emb = tuple(float(v) for v in self.embedding)
            if not emb or not all(math.isfinite(v) for v in emb):
                raise DataError("embedding must be non-empty and finite")
            object.__setattr__(self, "embedding", emb)

    @property
    def label(self) -> str:
        """Canonical label string of the detection; see :func:`normalize_text`."""
        return " ".join(sorted(set(normalize_text(" ".join(self.soft_labels)))))

    def at_frame(self, frame: int) -> Detection:
        return replace(self, frame=frame)


@dataclass(frozen=True)
class Tubelet:
    """Time-ordered detections of one tracked subject."""

    id: str
    detections: tuple[Detection, ...]
    fps_sampled: float = 5.0

    def __post_init__(self):
        dets = tuple(self.detections)
        object.__setattr__(self, "detections", dets)
        if not dets:
            raise DataError(f"tubelet {self.id!r} has no detections")
        for prev, cur in zip(dets, dets[1:]):
            if cur.frame <= prev.frame:
                raise DataError(f"tubelet {self.id!r}: frames not strictly increasing")

    @property
    def span(self) -> TemporalSpan:
        return TemporalSpan(self.detections[0].frame, self.detections[-1].frame, self.fps_sampled)

    @property
    def frames(self) -> list[int]:
        return [d.frame for d in self.detections]

    @property
    def mean_confidence(self) -> float:
        return sum(d.confidence for d in self.detections) / len(self.detections)

    def boxes(self) -> dict[int, BBox]:
        return {d.frame: d.box for d in self.detections}

    def __len__(self) -> int:
        return len(self.detections)


@dataclass(frozen=True)
class SubActionPhrase:
    text: str
    # None when the extraction carried no indices; contiguity is then unchecked
    action_indices: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.action_indices is not None:
            object.__setattr__(self, "action_indices", tuple(int(i) for i in self.action_indices))


@dataclass(frozen=True)
class QueryRecord:
    video_id: str
    caption: str
    subject_phrase: str
    sub_actions: Mapping[int, tuple[SubActionPhrase, ...]] = field(default_factory=dict)
    query_embedding: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not self.subject_phrase.strip():
            raise DataError(f"query for {self.video_id!r}: empty subject phrase")
        subs = {int(k): tuple(v) for k, v in dict(self.sub_actions).items()}
        object.__setattr__(self, "sub_actions", dict(sorted(subs.items())))
        if self.query_embedding is not None:
            emb = tuple(float(v) for v in self.query_embedding)
            if not emb or not all(math.isfinite(v) for v in emb):
                raise DataError("query embedding must be non-empty and finite")
            object.__setattr__(self, "query_embedding", emb)

    def __hash__(self):
        return hash((self.video_id, self.caption, self.subject_phrase))


@dataclass(frozen=True)
class GroundTruthAnnotation:
    video_id: str
    span: TemporalSpan
    boxes: Mapping[int, BBox]

    def __post_init__(self):
        boxes = {int(k): v for k, v in dict(self.boxes).items()}
        missing = [f for f in self.span.frames() if f not in boxes]
        if missing:
            raise DataError(f"annotation {self.video_id!r}: no box on frames {missing[:5]}")
        extra = [f for f in boxes if not self.span.start <= f <= self.span.end]
        if extra:
            raise DataError(f"annotation {self.video_id!r}: boxes outside span on {extra[:5]}")
        object.__setattr__(self, "boxes", dict(sorted(boxes.items())))

    def __hash__(self):
        return hash((self.video_id, self.span))


_PUNCT = str.maketrans({c: " " for c in "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"})


def normalize_text(text: str) -> list[str]:
    """Lowercase, strip punctuation and split on whitespace."""
    return text.lower().translate(_PUNCT).split()


def box_iou(a: BBox, b: BBox) -> float:
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def temporal_iou(a: TemporalSpan, b: TemporalSpan) -> float:
    """Frame-count IoU of two inclusive spans."""
    if a.fps_sampled != b.fps_sampled:
        raise ConfigurationError(
            f"cannot compare spans sampled at {a.fps_sampled} and {b.fps_sampled} fps"
        )
    inter = min(a.end, b.end) - max(a.start, b.start) + 1
    if inter <= 0:
        return 0.0
    union = a.n_frames + b.n_frames - inter
    return inter / union


def mode_with_first_tiebreak(values: Sequence[str]) -> str:
    """Most frequent value; ties go to the value that occurs first."""
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    # dicts keep first-insertion order, and max() returns the first maximum
    return max(counts, key=counts.__getitem__)


def merge_frames(detections: Iterable[Detection]) -> dict[int, list[Detection]]:
    frames: dict[int, list[Detection]] = {}
    for d in detections:
        frames.setdefault(d.frame, []).append(d)
    return dict(sorted(frames.items()))
