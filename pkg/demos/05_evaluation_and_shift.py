"""Score predictions, compare against oracle upper bounds, and run the shift check.

Run:  python3 demos/05_evaluation_and_shift.py
"""
from tubeground.core import TemporalSpan
from tubeground.evaluation import evaluate, format_table, shift_classify, shift_report, upper_bound_tubelet
from tubeground.fixtures import FixtureSpec, generate_fixture
from tubeground.grounding import ground
from tubeground.tracking import link_detections

data = generate_fixture(FixtureSpec(n_videos=6, actors_per_video=3, label_noise_rate=0.1, seed=12))
preds, anns = [], {}
for v in data.videos:
    tubelets = link_detections(v.frames)
    preds.append(ground(v.query, tubelets, v.trm_span))
    anns[v.meta.video_id] = v.annotation
    best, score = upper_bound_tubelet(v.annotation, tubelets)
    print(f"{v.meta.video_id}: picked {preds[-1].tubelet_id}, best possible {best} (vIoU {score:.3f})")

print()
print(format_table(evaluate(preds, anns)))

# Dropping the first sub-action should move the predicted midpoint later.
full = preds[0].span
moves = [(full.start + 2, full.end + 2), (full.start, full.end), (full.start - 1, full.end - 3)]
records = [shift_classify(full, TemporalSpan(a, max(a, b)), "start") for a, b in moves]
print([r.shift.value for r in records])
print(shift_report(records)["start"])
