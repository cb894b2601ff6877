"""Greedy IoU tracker that links per-frame detections into tubelets.

A stand-in for a full motion/appearance tracker: every frame, live tracks are
matched to detections greedily in order of descending IoU with the track's
last box.  The result is fully deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import ConfigurationError, Detection, Tubelet, box_iou

# IoUs are compared after rounding so that geometrically equal overlaps tie
# exactly instead of being ordered by floating-point noise
IOU_DECIMALS = 12


@dataclass(frozen=True)
class TrackerParams:
    iou_min: float = 0.3
    max_gap: int = 2
    min_track_len: int = 2

    def __post_init__(self):
        if not 0.0 < self.iou_min <= 1.0:
            raise ConfigurationError(f"iou_min must be in (0, 1], got {self.iou_min}")
        if self.max_gap < 0:
            raise ConfigurationError(f"max_gap must be >= 0, got {self.max_gap}")
        if self.min_track_len < 1:
            raise ConfigurationError(f"min_track_len must be >= 1, got {self.min_track_len}")


def _track_id(n: int) -> str:
    return f"t{n:04d}"


def link_detections(
    frames: Mapping[int, Sequence[Detection]],
    params: TrackerParams = TrackerParams(),
    fps_sampled: float = 5.0,
) -> list[Tubelet]:
    """Link detections into tubelets.

    Matching priority within a frame is (IoU descending, detection index,
    track id); a pair is eligible when IoU >= ``params.iou_min``.  A track
    that has missed more than ``max_gap`` sampled frames is closed.  Tracks
    shorter than ``min_track_len`` are dropped.  Output is sorted by
    (first frame, id).
    """
    tracks: list[list[Detection]] = []
    open_ids: list[int] = []

    for frame in sorted(frames):
        dets = list(frames[frame])
        for d in dets:
            if d.frame != frame:
                raise ValueError(f"detection for frame {d.frame} filed under frame {frame}")

        open_ids = [t for t in open_ids if frame - tracks[t][-1].frame - 1 <= params.max_gap]

        candidates = []
        for di, det in enumerate(dets):
            for tid in open_ids:
                iou = round(box_iou(tracks[tid][-1].box, det.box), IOU_DECIMALS)
                if iou >= params.iou_min:
                    candidates.append((-iou, di, tid))
        candidates.sort()

        used_dets: set[int] = set()
        used_tracks: set[int] = set()
        for _, di, tid in candidates:
            if di in used_dets or tid in used_tracks:
                continue
            used_dets.add(di)
            used_tracks.add(tid)
            tracks[tid].append(dets[di])

        for di, det in enumerate(dets):
            if di not in used_dets:
                tracks.append([det])
                open_ids.append(len(tracks) - 1)

    out = [
        Tubelet(_track_id(n), tuple(dets), fps_sampled)
        for n, dets in enumerate(tracks)
        if len(dets) >= params.min_track_len
    ]
    out.sort(key=lambda t: (t.detections[0].frame, t.id))
    return out
