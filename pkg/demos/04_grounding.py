"""Pick the queried tubelet given a temporal prediction.

Run:  python3 demos/04_grounding.py
"""
import math

from tubeground.core import BBox, Detection, QueryRecord, TemporalSpan, Tubelet
from tubeground.grounding import (
    InferenceParams,
    ScorerKind,
    contrastive_loss_from_scores,
    ground,
    select_candidates,
)


def tubelet(tid, frames, conf, emb):
    return Tubelet(tid, tuple(Detection(f, BBox(10 * f, 0, 10 * f + 40, 80), conf, ("man",), emb) for f in frames))


query = QueryRecord("clip", "The man waves", "The man", {}, (1.0, 0.0))
trm = TemporalSpan(10, 20)
pool = [
    tubelet("inside", range(12, 19, 2), 0.6, (0.6, 0.8)),
    tubelet("covering", range(0, 31, 3), 0.5, (0.95, math.sqrt(1 - 0.95**2))),
    tubelet("late", range(18, 41, 2), 0.9, (1.0, 0.0)),
]

kept = [t.id for t in select_candidates(pool, trm)]
print(f"temporal prediction {trm.start}-{trm.end}: candidates {kept} ('late' overlaps too little)")

for scorer in ScorerKind:
    p = ground(query, pool, trm, scorer)
    scores = {k: round(v, 3) for k, v in p.scores.items()}
    print(f"{scorer.value:>16}: picks {p.tubelet_id} on frames {p.span.start}-{p.span.end}, scores {scores}")

p = ground(query, pool, trm, params=InferenceParams(mode="filter_only"))
print(f"without trimming the prediction spans {p.span.start}-{p.span.end}")

print("\ncontrastive loss as the positive score rises (negatives 0.2, 0.5):")
for s in (0.0, 0.3, 0.6, 0.9):
    print(f"  s+={s:.1f}: {contrastive_loss_from_scores(s, [0.2, 0.5], 0.1):.4f}")
