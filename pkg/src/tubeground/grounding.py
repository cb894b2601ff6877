"""Tubelet scoring and joint spatio-temporal inference.

Inference takes a temporal prediction (start/end from an external temporal
model, or the whole video), keeps tubelets that agree with it, fills their
gaps by nearest-neighbour copying, optionally trims them to the prediction,
scores each survivor and returns the best.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import (
    BBox,
    ConfigurationError,
    DataError,
    InvalidSampleError,
    QueryRecord,
    TemporalSpan,
    TubegroundError,
    Tubelet,
    temporal_iou,
)

logger = logging.getLogger(__name__)

# scores closer than this are treated as tied
SCORE_TIE_TOL = 1e-12
NLL_PROB_FLOOR = 1e-12


class ScorerKind(str, Enum):
    MEAN_CONFIDENCE = "mean_confidence"
    EMBEDDING_SIM = "embedding_sim"


class InferenceMode(str, Enum):
    FILTER_AND_TRIM = "filter_and_trim"
    FILTER_ONLY = "filter_only"


@dataclass(frozen=True)
class InferenceParams:
    t_filt: float = 0.2
    mode: InferenceMode = InferenceMode.FILTER_AND_TRIM
    fill_stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", InferenceMode(self.mode))
        if not 0.0 <= self.t_filt <= 1.0:
            raise ConfigurationError(f"t_filt must be in [0, 1], got {self.t_filt}")
        if self.fill_stride < 1:
            raise ConfigurationError(f"fill_stride must be >= 1, got {self.fill_stride}")


class InconsistentCandidateError(TubegroundError):
    """A selected candidate does not overlap the temporal prediction."""


# --- scoring ------------------------------------------------------------------


def sim_avg(tubelet_embeddings: Sequence[Sequence[float]], query_embedding: Sequence[float]) -> float:
    """Mean over detections of cosine(detection embedding, query embedding).

    Zero-norm vectors score 0 instead of NaN.
    """
    feats = np.asarray(tubelet_embeddings, dtype=float)
    q = np.asarray(query_embedding, dtype=float)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("need a non-empty list of embedding vectors")
    if q.ndim != 1 or feats.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: features {feats.shape}, query {q.shape}")

    norms = np.linalg.norm(feats, axis=1)
    qn = np.linalg.norm(q)
    if qn == 0 or np.any(norms == 0):
        logger.warning("zero-norm embedding encountered; its similarity counts as 0")
    denom = norms * qn
    sims = np.divide(feats @ q, denom, out=np.zeros_like(norms), where=denom > 0)
    return float(np.mean(sims))


def contrastive_loss_from_scores(positive: float, negatives: Sequence[float], temperature: float) -> float:
    """-log softmax of the positive score among positive + negatives at temperature tau."""
    if not temperature > 0:
        raise ConfigurationError(f"temperature must be > 0, got {temperature}")
    logits = np.concatenate([[positive], np.asarray(negatives, dtype=float)]) / temperature
    if logits.size == 1:
        return 0.0
    return float(logsumexp(logits) - logits[0])


@dataclass(frozen=True)
class ContrastiveSample:
    positive: Sequence[Sequence[float]]
    negatives: Sequence[Sequence[Sequence[float]]]
    query: Sequence[float]


@dataclass(frozen=True)
class ContrastiveBatch:
    samples: Sequence[ContrastiveSample]
    temperature: float = 0.1

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")
        dims = {len(s.query) for s in self.samples}
        for s in self.samples:
            for seq in (s.positive, *s.negatives):
                dims.update(len(v) for v in seq)
        if len(dims) > 1:
            raise ValueError(f"feature dimensions differ: {sorted(dims)}")


def spatial_contrastive_loss(batch: ContrastiveBatch) -> float:
    """Batch-mean tubelet/query contrastive loss.

    For sample i the positive is its own target tubelet; negatives are its
    other tubelets plus every tubelet of every other sample in the batch,
    all scored against sample i's query with :func:`sim_avg`.
    """
    samples = list(batch.samples)
    if not samples:
        raise ValueError("empty batch")
    losses = []
    for i, s in enumerate(samples):
        pos = sim_avg(s.positive, s.query)
        negs = [sim_avg(n, s.query) for n in s.negatives]
        for j, other in enumerate(samples):
            if j != i:
                negs.extend(sim_avg(t, s.query) for t in (other.positive, *other.negatives))
        losses.append(contrastive_loss_from_scores(pos, negs, batch.temperature))
    return float(np.mean(losses))


def reconstruction_nll(word_probs: Sequence[float]) -> float:
    """Negative log-likelihood of a caption from per-word probabilities."""
    if len(word_probs) == 0:
        raise ValueError("no word probabilities")
    total = 0.0
    for p in word_probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
        total -= math.log(max(p, NLL_PROB_FLOOR))
    return total


def _argmax_tubelet(scored: Sequence[tuple[Tubelet, float]]) -> tuple[Tubelet, float]:
    best = max(score for _, score in scored)
    tied = [(t, s) for t, s in scored if best - s <= SCORE_TIE_TOL]
    return min(tied, key=lambda ts: (ts[0].detections[0].frame, ts[0].id))


def wgdino_select(tubelets: Sequence[Tubelet]) -> tuple[str, float]:
    """Baseline: the tubelet with the highest mean detection confidence."""
    if not tubelets:
        raise ValueError("no tubelets to select from")
    t, score = _argmax_tubelet([(t, t.mean_confidence) for t in tubelets])
    return t.id, score


# --- joint inference ----------------------------------------------------------


def select_candidates(
    tubelets: Sequence[Tubelet], trm_span: TemporalSpan, params: InferenceParams = InferenceParams()
) -> list[Tubelet]:
    """Tubelets that contain, or sit inside, the prediction, or overlap it by tIoU > t_filt."""
    out = []
    for t in tubelets:
        span = t.span
        if span.contains(trm_span) or trm_span.contains(span) or temporal_iou(span, trm_span) > params.t_filt:
            out.append(t)
    return out


def interpolate_tubelet(t: Tubelet, fill_stride: int = 1) -> Tubelet:
    """Fill missing frames by copying the temporally nearest detection (earlier wins ties)."""
    if fill_stride < 1:
        raise ConfigurationError(f"fill_stride must be >= 1, got {fill_stride}")
    dets = t.detections
    frames = [d.frame for d in dets]
    index_of = {f: i for i, f in enumerate(frames)}
    wanted = sorted(set(range(frames[0], frames[-1] + 1, fill_stride)) | set(frames))
    if len(wanted) == len(dets):
        return t

    out = []
    j = 0  # index of the last known detection at or before f
    for f in wanted:
        if f in index_of:
            j = index_of[f]
            out.append(dets[j])
            continue
        before, after = dets[j], dets[j + 1]
        src = before if f - before.frame <= after.frame - f else after
        out.append(src.at_frame(f))
    return replace(t, detections=tuple(out))


def trim_tubelet(t: Tubelet, trm_span: TemporalSpan, mode: InferenceMode | str) -> Tubelet:
    mode = InferenceMode(mode)
    if mode is InferenceMode.FILTER_ONLY:
        return t
    lo = max(t.span.start, trm_span.start)
    hi = min(t.span.end, trm_span.end)
    kept = tuple(d for d in t.detections if lo <= d.frame <= hi)
    if not kept:
        raise InconsistentCandidateError(
            f"tubelet {t.id!r} {t.span.start}-{t.span.end} has no detections inside "
            f"{trm_span.start}-{trm_span.end}"
        )
    return replace(t, detections=kept)


@dataclass(frozen=True)
class Prediction:
    video_id: str
    tubelet_id: str
    span: TemporalSpan
    boxes: Mapping[int, BBox]
    scores: Mapping[str, float] = field(default_factory=dict)
    fallback: bool = False

    def __hash__(self):
        return hash((self.video_id, self.tubelet_id, self.span))


def score_tubelet(t: Tubelet, scorer: ScorerKind, query: QueryRecord) -> float:
    if scorer is ScorerKind.MEAN_CONFIDENCE:
        return t.mean_confidence
    if query.query_embedding is None:
        raise DataError(f"{query.video_id}: embedding_sim scorer needs a query embedding")
    if any(d.embedding is None for d in t.detections):
        raise DataError(f"{query.video_id}: tubelet {t.id!r} lacks detection embeddings")
    return sim_avg([d.embedding for d in t.detections], query.query_embedding)


def ground(
    query: QueryRecord,
    tubelets: Sequence[Tubelet],
    trm_span: TemporalSpan,
    scorer: ScorerKind | str = ScorerKind.MEAN_CONFIDENCE,
    params: InferenceParams = InferenceParams(),
) -> Prediction:
    """Pick the query's tubelet inside the temporal prediction.

    If no tubelet passes candidate selection all tubelets are scored instead,
    untrimmed, and the prediction is flagged ``fallback``.
    """
    scorer = ScorerKind(scorer)
    if not tubelets:
        raise InvalidSampleError(f"{query.video_id}: no tubelets to ground")

    candidates = select_candidates(tubelets, trm_span, params)
    fallback = not candidates
    if fallback:
        logger.warning("%s: no candidate passed temporal selection; scoring all tubelets", query.video_id)
        candidates = list(tubelets)

    prepared = []
    for t in candidates:
        t = interpolate_tubelet(t, params.fill_stride)
        if not fallback:
            t = trim_tubelet(t, trm_span, params.mode)
        prepared.append((t, score_tubelet(t, scorer, query)))

    best, _ = _argmax_tubelet(prepared)
    return Prediction(
        video_id=query.video_id,
        tubelet_id=best.id,
        span=best.span,
        boxes=best.boxes(),
        scores={t.id: s for t, s in prepared},
        fallback=fallback,
    )
