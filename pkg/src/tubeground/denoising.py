"""Soft-label switching statistics and the two train-set denoising strategies.

Labels are compared in canonical form (:attr:`Detection.label`), so
``"person woman"`` and ``"woman person"`` count as the same label.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .core import Detection, Tubelet, box_iou, mode_with_first_tiebreak
from .slf import DEFAULT_LEXICON, CategoryLexicon, is_conflicting


@dataclass(frozen=True)
class SwitchedRun:
    start: int
    end: int
    label: str
    duration_seconds: float
    indices: tuple[int, ...]


@dataclass(frozen=True)
class SwitchReport:
    mode_label: str
    switching_fraction: float
    switch_points: tuple[tuple[int, float], ...]
    switched_runs: tuple[SwitchedRun, ...]


def tubelet_mode_label(t: Tubelet) -> str:
    return mode_with_first_tiebreak([d.label for d in t.detections])


def switching_fraction(t: Tubelet) -> float:
    mode = tubelet_mode_label(t)
    return sum(d.label != mode for d in t.detections) / len(t.detections)


def analyze_switching(t: Tubelet) -> SwitchReport:
    dets = t.detections
    labels = [d.label for d in dets]
    mode = mode_with_first_tiebreak(labels)

    points = tuple(
        (dets[i].frame, box_iou(dets[i - 1].box, dets[i].box))
        for i in range(1, len(dets))
        if labels[i] != labels[i - 1]
    )

    # runs of one non-mode label; a change of label starts a new run
    runs = []
    i = 0
    while i < len(dets):
        if labels[i] == mode:
            i += 1
            continue
        j = i
        while j + 1 < len(dets) and labels[j + 1] == labels[i]:
            j += 1
        start, end = dets[i].frame, dets[j].frame
        runs.append(
            SwitchedRun(start, end, labels[i], (end - start + 1) / t.fps_sampled, tuple(range(i, j + 1)))
        )
        i = j + 1

    frac = sum(lab != mode for lab in labels) / len(labels)
    return SwitchReport(mode, frac, points, tuple(runs))


def switch_addition_partition(
    t: Tubelet,
    min_duration_s: float = 1.0,
    lex: CategoryLexicon = DEFAULT_LEXICON,
    conflicting_only: bool = True,
) -> tuple[list[Tubelet], list[Detection]]:
    """Split off long non-mode runs; return (tubelets, dropped detections).

    With ``conflicting_only`` (the default) tubelets whose labels never mix
    two specific categories are returned untouched.
    """
    if min_duration_s <= 0:
        raise ValueError("min_duration_s must be positive")
    if conflicting_only and not is_conflicting(t, lex):
        return [t], []
    report = analyze_switching(t)
    if not report.switched_runs:
        return [t], []

    extracted = []
    dropped: list[Detection] = []
    for n, run in enumerate(report.switched_runs):
        run_dets = tuple(t.detections[i] for i in run.indices)
        if run.duration_seconds > min_duration_s:
            extracted.append(replace(t, id=f"{t.id}_s{n}", detections=run_dets))
        else:
            dropped.extend(run_dets)
    remainder = tuple(d for d in t.detections if d.label == report.mode_label)
    out = [replace(t, detections=remainder), *extracted]

    n_out = sum(len(x) for x in out)
    assert n_out + len(dropped) == len(t), "switch-addition lost detections"
    return out, dropped


def denoise_switch_addition(
    t: Tubelet,
    min_duration_s: float = 1.0,
    lex: CategoryLexicon = DEFAULT_LEXICON,
    conflicting_only: bool = True,
) -> list[Tubelet]:
    """Long label-switched runs become their own tubelets, short ones are dropped."""
    return switch_addition_partition(t, min_duration_s, lex, conflicting_only)[0]


def denoise_switch_dropping(
    t: Tubelet, lex: CategoryLexicon = DEFAULT_LEXICON, conflicting_only: bool = True
) -> Tubelet:
    """Drop every detection whose label is not the tubelet's mode label."""
    if conflicting_only and not is_conflicting(t, lex):
        return t
    mode = tubelet_mode_label(t)
    kept = tuple(d for d in t.detections if d.label == mode)
    if len(kept) == len(t):
        return t
    return replace(t, detections=kept)
