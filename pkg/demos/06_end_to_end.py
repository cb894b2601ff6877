"""Generate a synthetic corpus and push it through the whole pipeline.

Run:  python3 demos/06_end_to_end.py [outdir]

The same run from a shell:

    tubeground fixture --outdir corpus --seed 3 --label-noise 0.1
    tubeground run --detections corpus/detections.jsonl --queries corpus/queries.jsonl \\
        --annotations corpus/annotations.jsonl --trm-spans corpus/trm_spans.jsonl \\
        --videos corpus/videos.jsonl --outdir out
"""
import json
import sys
import tempfile
from pathlib import Path

from tubeground import PipelineConfig, PipelineInputs, run_pipeline
from tubeground.fixtures import FixtureSpec, generate_fixture

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
paths = generate_fixture(FixtureSpec(n_videos=5, actors_per_video=3, label_noise_rate=0.1, seed=3)).write(root / "corpus")
inputs = PipelineInputs(paths["detections"], paths["queries"], paths["annotations"], paths["trm_spans"], paths["videos"])

summary = run_pipeline(PipelineConfig(), inputs, root / "out")
print("status:", summary.status)
for name, n in summary.counts.items():
    print(f"  {name:<24} {n}")
print((root / "out" / "eval.txt").read_text())
print("config hash:", json.loads((root / "out" / "manifest.json").read_text())["config_hash"][:16], "...")
print("outputs in", root / "out")
