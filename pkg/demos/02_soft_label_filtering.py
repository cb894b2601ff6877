"""Keep only tubelets whose detector labels agree with the query subject.

Run:  python3 demos/02_soft_label_filtering.py
"""
from tubeground.core import BBox, Detection, Tubelet
from tubeground.slf import normalize_label, slf_filter, subject_category, tubelet_type


def tubelet(tid, labels):
    return Tubelet(tid, tuple(Detection(i, BBox(0, 0, 10, 10), 0.8, tuple(lab.split("+")))
                              for i, lab in enumerate(labels)))


for raw in ["person+woman", "man+woman", "boy", "police officer"]:
    print(f"soft label {raw!r:>18} -> {normalize_label(raw.replace('+', ' '))}")

pool = [
    tubelet("steady-man", ["man"] * 6),
    tubelet("steady-woman", ["woman"] * 5 + ["person+woman"]),
    tubelet("generic", ["person"] * 6),
    # mostly "woman" but flips often: kept for a male subject because of variability
    tubelet("flicker", ["woman", "man", "woman", "man", "woman", "woman"]),
]
print()
for t in pool:
    print(f"{t.id:>13}: type {tubelet_type(t)}")

for subject in ["The man in a black coat", "The lady", "The person"]:
    kept = [t.id for t in slf_filter(pool, subject)]
    print(f"\nsubject {subject!r} ({subject_category(subject)}) keeps {kept}")
