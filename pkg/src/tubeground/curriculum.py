"""Curriculum construction.

Spatial stages order videos by tubelet congestion (mean pairwise temporal IoU
of their tubelets), from crowded-in-time to sparse.  Temporal stages order
sub-action phrases by how many consecutive actions they describe.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .core import (
    ConfigurationError,
    InvalidSampleError,
    QueryRecord,
    Tubelet,
    temporal_iou,
)

logger = logging.getLogger(__name__)

# float slack for stage thresholds such as 1 - 3 * 0.2
_THRESHOLD_EPS = 1e-9


class Direction(str, Enum):
    HIGH_TO_LOW = "high_to_low"
    LOW_TO_HIGH = "low_to_high"


@dataclass(frozen=True)
class CongestionRecord:
    video_id: str
    n_tubelets: int
    congestion: float

    def __post_init__(self):
        if not 0.0 <= self.congestion <= 1.0:
            raise ValueError(f"congestion {self.congestion} outside [0, 1]")


@dataclass
class StagePlan:
    stages: list[tuple[int, list[str]]]
    cumulative: bool = True
    direction: Direction = Direction.HIGH_TO_LOW
    # sample id -> reasons it was left out
    rejected: dict[str, list[str]] = field(default_factory=dict)

    def members(self, stage: int) -> list[str]:
        return dict(self.stages)[stage]

    def sizes(self) -> list[int]:
        return [len(m) for _, m in self.stages]

    def additional_counts(self) -> list[int]:
        """Number of samples each stage adds over the union of earlier stages."""
        seen: set[str] = set()
        out = []
        for _, members in self.stages:
            new = set(members) - seen
            out.append(len(new))
            seen |= new
        return out


def congestion(tubelets: Sequence[Tubelet]) -> float:
    """Mean temporal IoU over all unordered tubelet pairs (1.0 for a single tubelet)."""
    n = len(tubelets)
    if n == 0:
        raise InvalidSampleError("congestion is undefined for a video without tubelets")
    if n == 1:
        return 1.0
    spans = [t.span for t in tubelets]
    total = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            total += temporal_iou(spans[i], spans[j])
    return total / (n * (n - 1) / 2)


def cgs_stage_assignment(
    records: Sequence[CongestionRecord],
    n_stages: int = 5,
    delta: float = 0.2,
    direction: Direction | str = Direction.HIGH_TO_LOW,
    cumulative: bool = True,
) -> StagePlan:
    """Bucket videos into congestion stages.

    High-to-low: stage k holds samples with congestion >= 1 - k*delta, the
    last stage's threshold clamped to 0.  Low-to-high mirrors this with
    congestion <= k*delta, the last threshold clamped to 1.  Non-cumulative
    plans keep only the samples each stage adds.
    """
    direction = Direction(direction)
    if n_stages < 1 or not delta > 0 or n_stages * delta > 1 + 1e-9:
        raise ConfigurationError(
            f"need n_stages >= 1, delta > 0 and n_stages*delta <= 1 (got {n_stages}, {delta})"
        )

    stages = []
    seen: set[str] = set()
    for k in range(1, n_stages + 1):
        last = k == n_stages
        if direction is Direction.HIGH_TO_LOW:
            thr = 0.0 if last else 1.0 - k * delta
            members = [r.video_id for r in records if r.congestion >= thr - _THRESHOLD_EPS]
        else:
            thr = 1.0 if last else k * delta
            members = [r.video_id for r in records if r.congestion <= thr + _THRESHOLD_EPS]
        if not cumulative:
            members = [m for m in members if m not in seen]
        seen.update(members)
        stages.append((k, members))
    return StagePlan(stages, cumulative, direction)


@dataclass(frozen=True)
class ValidationResult:
    video_id: str
    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_subactions(q: QueryRecord) -> ValidationResult:
    """Check sub-action keys and, where present, their action indices."""
    violations = []
    warnings = []
    keys = sorted(q.sub_actions)
    if not keys:
        violations.append("no sub-actions")
    elif keys != list(range(1, len(keys) + 1)):
        violations.append(f"keys {keys} are not consecutive from 1")

    for k in keys:
        for pos, phrase in enumerate(q.sub_actions[k]):
            idx = phrase.action_indices
            where = f"[{k}][{pos}]"
            if idx is None:
                warnings.append(f"{where} has no action indices; contiguity unchecked")
                continue
            if len(idx) != k:
                violations.append(f"{where} has {len(idx)} action indices, expected {k}")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                violations.append(f"{where} indices {list(idx)} not strictly increasing")
            elif idx and idx[-1] - idx[0] + 1 != len(idx):
                violations.append(f"{where} indices {list(idx)} not contiguous")
    return ValidationResult(q.video_id, tuple(violations), tuple(warnings))


def phrase_id(video_id: str, k: int, pos: int) -> str:
    return f"{video_id}#{k}#{pos}"


def satcl_stage_assignment(
    queries: Sequence[QueryRecord],
    n_stages: int = 4,
    cumulative: bool = True,
) -> StagePlan:
    """Stage sub-action phrases by action count.

    Stage k holds phrases describing k actions (up to k when cumulative);
    phrases with more than ``n_stages`` actions fold into the last stage.
    Queries that fail :func:`validate_subactions` are left out and listed in
    ``StagePlan.rejected``.
    """
    if n_stages < 1:
        raise ConfigurationError(f"n_stages must be >= 1, got {n_stages}")

    rejected: dict[str, list[str]] = {}
    by_stage: dict[int, list[tuple[str, int, int]]] = {k: [] for k in range(1, n_stages + 1)}
    for q in queries:
        result = validate_subactions(q)
        for w in result.warnings:
            logger.warning("%s: %s", q.video_id, w)
        if not result.ok:
            rejected[q.video_id] = list(result.violations)
            logger.warning("rejecting sub-actions of %s: %s", q.video_id, "; ".join(result.violations))
            continue
        for k, phrases in q.sub_actions.items():
            stage = min(k, n_stages)
            for pos in range(len(phrases)):
                by_stage[stage].append((q.video_id, k, pos))

    stages = []
    acc: list[tuple[str, int, int]] = []
    for k in range(1, n_stages + 1):
        current = sorted(by_stage[k])
        if cumulative:
            acc = sorted(acc + current)
            current = acc
        stages.append((k, [phrase_id(*key) for key in current]))
    return StagePlan(stages, cumulative, Direction.LOW_TO_HIGH, rejected)
