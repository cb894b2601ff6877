"""Seeded synthetic detection streams with known ground truth.

Each video has a few actors.  Stationary and linear actors move in separate
horizontal lanes so they never overlap; crossing actors share a lane and
walk through each other, which is where a greedy tracker can swap
identities.  One actor per video is the query target.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BBox, Detection, GroundTruthAnnotation, QueryRecord, SubActionPhrase, TemporalSpan
from .io import (
    VideoMeta,
    annotation_to_dict,
    detection_to_dict,
    query_to_dict,
    trm_span_to_dict,
    video_to_dict,
    write_jsonl,
)

TRAJECTORY_KINDS = ("stationary", "linear", "crossing")

_SUBJECTS = ["man", "woman", "boy", "girl", "person", "lady"]
_ATTRIBUTES = ["in red", "in a black coat", "with glasses", "in white", "with a hat"]
_ACTIONS = [
    "walks forward",
    "turns around",
    "raises his hand",
    "sits down",
    "picks up the cup",
    "looks at the door",
    "stands up",
    "waves",
]
_CONFUSERS = {"man": "woman", "boy": "girl", "woman": "man", "girl": "boy", "lady": "man", "person": "man"}

IMAGE_W, IMAGE_H = 640, 480


@dataclass(frozen=True)
class FixtureSpec:
    n_videos: int = 3
    actors_per_video: int = 2
    n_frames: int = 20
    trajectory_kinds: tuple[str, ...] = TRAJECTORY_KINDS
    label_noise_rate: float = 0.0
    miss_rate: float = 0.0
    seed: int = 0
    fps_sampled: float = 5.0
    embedding_dim: int = 8

    def __post_init__(self):
        object.__setattr__(self, "trajectory_kinds", tuple(self.trajectory_kinds))
        bad = set(self.trajectory_kinds) - set(TRAJECTORY_KINDS)
        if bad or not self.trajectory_kinds:
            raise ValueError(f"unknown trajectory kinds {sorted(bad)}")
        if self.n_videos < 0 or self.actors_per_video < 1 or self.n_frames < 2:
            raise ValueError("need n_videos >= 0, actors_per_video >= 1, n_frames >= 2")
        if not 0 <= self.label_noise_rate <= 1 or not 0 <= self.miss_rate < 1:
            raise ValueError("rates must lie in [0, 1]")


@dataclass
class ActorTruth:
    actor: int
    label: str
    start: int
    end: int
    boxes: dict[int, BBox]
    # (frame, index of this actor's detection in that frame's list)
    detections: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class VideoFixture:
    meta: VideoMeta
    frames: dict[int, list[Detection]]
    actors: list[ActorTruth]
    query: QueryRecord
    annotation: GroundTruthAnnotation
    trm_span: TemporalSpan
    kind: str
    target: int


@dataclass
class FixtureData:
    spec: FixtureSpec
    videos: list[VideoFixture]

    def write(self, outdir: str | Path) -> dict[str, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            name: outdir / f"{name}.jsonl"
            for name in ("videos", "detections", "queries", "annotations", "trm_spans", "actors")
        }
        write_jsonl(paths["videos"], (video_to_dict(v.meta) for v in self.videos))
        write_jsonl(
            paths["detections"],
            (
                detection_to_dict(d, v.meta.video_id)
                for v in self.videos
                for f in sorted(v.frames)
                for d in v.frames[f]
            ),
        )
        write_jsonl(paths["queries"], (query_to_dict(v.query) for v in self.videos))
        write_jsonl(paths["annotations"], (annotation_to_dict(v.annotation) for v in self.videos))
        write_jsonl(paths["trm_spans"], (trm_span_to_dict(v.meta.video_id, v.trm_span) for v in self.videos))
        write_jsonl(
            paths["actors"],
            (
                {
                    "video_id": v.meta.video_id,
                    "actor": a.actor,
                    "label": a.label,
                    "target": a.actor == v.target,
                    "detections": [list(x) for x in a.detections],
                }
                for v in self.videos
                for a in v.actors
            ),
        )
        return paths


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _round_vec(v: np.ndarray) -> tuple[float, ...]:
    return tuple(round(float(x), 6) for x in v)


def _clip_box(x1, y1, w, h) -> BBox:
    x1 = float(np.clip(x1, 0, IMAGE_W - w - 1))
    y1 = float(np.clip(y1, 0, IMAGE_H - h - 1))
    return BBox(round(x1, 1), round(y1, 1), round(x1 + w, 1), round(y1 + h, 1))


def actor_paths(
    rng: np.random.Generator, kind: str, n_actors: int, n_frames: int
) -> list[tuple[int, int, dict[int, BBox]]]:
    """(start, end, frame -> box) for each actor of one video."""
    out = []
    lane_h = IMAGE_H / n_actors
    for a in range(n_actors):
        length = int(rng.integers(max(2, n_frames // 2), n_frames + 1))
        start = int(rng.integers(0, n_frames - length + 1))
        end = start + length - 1
        w = float(rng.uniform(40, 90))
        if kind == "crossing":
            h = float(rng.uniform(80, 140))
            y0 = 150 + float(rng.uniform(-20, 20))
            # actors start on opposite sides and walk through each other
            left = a % 2 == 0
            x0 = 200 + float(rng.uniform(-30, 30)) if left else 360 + float(rng.uniform(-30, 30))
            speed = float(rng.uniform(6, 18)) * (1 if left else -1)
        else:
            h = min(float(rng.uniform(60, 100)), lane_h - 10)
            y0 = a * lane_h + float(rng.uniform(2, max(3, lane_h - h - 4)))
            x0 = float(rng.uniform(20, IMAGE_W - w - 200))
            speed = 0.0 if kind == "stationary" else float(rng.uniform(-8, 8))
        boxes = {}
        for f in range(start, end + 1):
            step = f - start
            boxes[f] = _clip_box(x0 + speed * step, y0, w, h)
        out.append((start, end, boxes))
    return out


def _caption(rng: np.random.Generator, subject: str, attribute: str, n_actions: int):
    picks = [str(x) for x in rng.choice(_ACTIONS, size=n_actions, replace=False)]
    head = f"The {subject} {attribute}"

    def join(actions):
        return head + " " + ", then ".join(actions)

    subs = {}
    for k in range(1, n_actions + 1):
        subs[k] = tuple(
            SubActionPhrase(join(picks[s : s + k]), tuple(range(s + 1, s + k + 1)))
            for s in range(0, n_actions - k + 1)
        )
    return join(picks), head, subs


def generate_video(rng: np.random.Generator, spec: FixtureSpec, video_id: str, kind: str) -> VideoFixture:
    n_actors = spec.actors_per_video
    paths = actor_paths(rng, kind, n_actors, spec.n_frames)
    labels = [str(rng.choice(_SUBJECTS)) for _ in range(n_actors)]
    embeddings = [_unit(rng, spec.embedding_dim) for _ in range(n_actors)]
    confidences = [float(rng.uniform(0.45, 0.9)) for _ in range(n_actors)]

    actors = [ActorTruth(a, labels[a], s, e, b) for a, (s, e, b) in enumerate(paths)]
    frames: dict[int, list[Detection]] = {}
    for f in range(spec.n_frames):
        present = [a for a in actors if a.start <= f <= a.end]
        order = [int(i) for i in rng.permutation(len(present))]
        row = []
        for i in order:
            a = present[i]
            if spec.miss_rate and rng.random() < spec.miss_rate and f not in (a.start, a.end):
                continue
            label = a.label
            if spec.label_noise_rate and rng.random() < spec.label_noise_rate:
                label = _CONFUSERS[a.label]
            soft = (label,) if rng.random() < 0.7 else ("person", label) if label != "person" else (label,)
            conf = float(np.clip(confidences[a.actor] + rng.normal(0, 0.03), 0.0, 1.0))
            emb = embeddings[a.actor] + rng.normal(0, 0.15, size=spec.embedding_dim)
            a.detections.append((f, len(row)))
            row.append(Detection(f, a.boxes[f], round(conf, 4), soft, _round_vec(emb)))
        if row:
            frames[f] = row

    target = int(rng.integers(0, n_actors))
    t_actor = actors[target]
    n_actions = int(rng.integers(1, 5))
    subject = t_actor.label
    caption, head, subs = _caption(rng, subject, str(rng.choice(_ATTRIBUTES)), n_actions)

    # the described activity covers a sub-range of the target's presence
    length = t_actor.end - t_actor.start + 1
    gt_len = int(rng.integers(max(1, length // 2), length + 1))
    gt_start = t_actor.start + int(rng.integers(0, length - gt_len + 1))
    gt_span = TemporalSpan(gt_start, gt_start + gt_len - 1, spec.fps_sampled)
    annotation = GroundTruthAnnotation(video_id, gt_span, {f: t_actor.boxes[f] for f in gt_span.frames()})

    # a noisy temporal prediction around the ground truth
    jitter = rng.integers(-2, 3, size=2)
    t0 = int(np.clip(gt_span.start + jitter[0], 0, spec.n_frames - 1))
    t1 = int(np.clip(gt_span.end + jitter[1], t0, spec.n_frames - 1))
    trm = TemporalSpan(t0, t1, spec.fps_sampled)

    q_emb = embeddings[target] + rng.normal(0, 0.1, size=spec.embedding_dim)
    query = QueryRecord(video_id, caption, head, subs, _round_vec(q_emb))
    meta = VideoMeta(video_id, spec.fps_sampled, spec.n_frames)
    return VideoFixture(meta, frames, actors, query, annotation, trm, kind, target)


def generate_fixture(spec: FixtureSpec) -> FixtureData:
    rng = np.random.default_rng(spec.seed)
    videos = []
    for i in range(spec.n_videos):
        kind = spec.trajectory_kinds[i % len(spec.trajectory_kinds)]
        videos.append(generate_video(rng, spec, f"v{i:03d}", kind))
    return FixtureData(spec, videos)


def crossing_frames(
    seed: int, n_actors: int = 3, n_frames: int = 10, quantize: bool = True
) -> dict[int, list[BBox]]:
    """Box-only crossing scenario used to compare the tracker against its oracle.

    With ``quantize`` boxes snap to a coarse grid, which makes exact IoU ties
    between competing pairs common.
    """
    rng = np.random.default_rng(seed)
    paths = actor_paths(rng, "crossing", n_actors, n_frames)
    frames: dict[int, list[BBox]] = {}
    for f in range(n_frames):
        row = []
        for start, end, boxes in paths:
            if start <= f <= end:
                b = boxes[f]
                if quantize:
                    b = BBox(*(float(10 * round(c / 10)) for c in (b.x1, b.y1, b.x2, b.y2)))
                row.append(b)
        order = rng.permutation(len(row))
        if row:
            frames[f] = [row[i] for i in order]
    return frames


def frames_to_detections(frames: dict[int, list[BBox]], label: str = "person") -> dict[int, list[Detection]]:
    return {f: [Detection(f, b, 0.9, (label,)) for b in boxes] for f, boxes in frames.items()}
