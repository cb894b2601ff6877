"""Link noisy detections into tubelets, then clean up label switches.

Run:  python3 demos/01_tracking_and_denoising.py
"""
from tubeground.denoising import analyze_switching, denoise_switch_addition, denoise_switch_dropping
from tubeground.fixtures import FixtureSpec, generate_fixture
from tubeground.tracking import link_detections

# Two actors crossing each other, with a detector that sometimes swaps man/woman.
spec = FixtureSpec(n_videos=1, actors_per_video=2, n_frames=20, trajectory_kinds=("crossing",),
                   label_noise_rate=0.25, seed=5)
video = generate_fixture(spec).videos[0]
print("actors:", [(a.label, a.start, a.end) for a in video.actors])

tubelets = link_detections(video.frames)
for t in tubelets:
    rep = analyze_switching(t)
    print(f"\n{t.id}: frames {t.span.start}-{t.span.end}, mode label {rep.mode_label!r}, "
          f"switching {rep.switching_fraction:.2f}")
    for run in rep.switched_runs:
        print(f"  run of {run.label!r} on frames {run.start}-{run.end} ({run.duration_seconds:.1f}s)")

    # Dropping keeps only mode-label detections; addition splits off long runs.
    dropped = denoise_switch_dropping(t)
    print(f"  switch-dropping keeps {len(dropped)}/{len(t)} detections")
    split = denoise_switch_addition(t, min_duration_s=0.5)
    print(f"  switch-addition (runs > 0.5s) -> {[(x.id, len(x)) for x in split]}")
