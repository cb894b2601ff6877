import math

import pytest
from hypothesis import given, strategies as st

from oracles import box_iou_exact, box_iou_grid, tiou_frames
from tubeground.core import (
    BBox,
    ConfigurationError,
    DataError,
    Detection,
    GroundTruthAnnotation,
    TemporalSpan,
    Tubelet,
    box_iou,
    mode_with_first_tiebreak,
    normalize_text,
    temporal_iou,
)


def test_box_iou_examples():
    assert box_iou(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 1.0
    assert box_iou(BBox(0, 0, 1, 1), BBox(2, 2, 3, 3)) == 0.0
    assert box_iou(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)) == pytest.approx(1 / 7, abs=1e-12)
    assert box_iou_grid((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)


def test_temporal_iou_examples():
    assert temporal_iou(TemporalSpan(0, 10), TemporalSpan(0, 10)) == 1.0
    assert temporal_iou(TemporalSpan(0, 4), TemporalSpan(6, 10)) == 0.0
    assert temporal_iou(TemporalSpan(0, 6), TemporalSpan(3, 9)) == pytest.approx(0.4)


def test_temporal_iou_rejects_mixed_rates():
    with pytest.raises(ConfigurationError):
        temporal_iou(TemporalSpan(0, 4, 5.0), TemporalSpan(0, 4, 2.0))


@pytest.mark.parametrize("coords", [(0, 0, 0, 1), (2, 0, 1, 1), (0, 0, math.nan, 1)])
def test_degenerate_boxes_rejected(coords):
    with pytest.raises(DataError):
        BBox(*coords)


def test_span_validation_and_properties():
    with pytest.raises(DataError):
        TemporalSpan(5, 4)
    s = TemporalSpan(10, 19, 5.0)
    assert s.n_frames == 10
    assert s.duration_seconds == pytest.approx(2.0)
    assert s.midpoint == 14.5
    assert s.contains(TemporalSpan(12, 15)) and not s.contains(TemporalSpan(9, 15))


def test_detection_label_is_canonical():
    a = Detection(0, BBox(0, 0, 1, 1), 0.5, ("Person", "woman"))
    b = Detection(0, BBox(0, 0, 1, 1), 0.5, ("woman person",))
    assert a.label == b.label == "person woman"


def test_detection_validation():
    with pytest.raises(DataError):
        Detection(0, BBox(0, 0, 1, 1), 1.5, ("man",))
    with pytest.raises(DataError):
        Detection(-1, BBox(0, 0, 1, 1), 0.5, ("man",))
    with pytest.raises(DataError):
        Detection(0, BBox(0, 0, 1, 1), 0.5, ())


def test_tubelet_requires_increasing_frames():
    d = Detection(3, BBox(0, 0, 1, 1), 0.5, ("man",))
    with pytest.raises(DataError):
        Tubelet("x", (d, d))
    with pytest.raises(DataError):
        Tubelet("x", ())


def test_annotation_must_cover_span():
    with pytest.raises(DataError):
        GroundTruthAnnotation("v", TemporalSpan(0, 2), {0: BBox(0, 0, 1, 1), 1: BBox(0, 0, 1, 1)})


def test_mode_tiebreak_examples():
    assert mode_with_first_tiebreak(["man", "man", "woman"]) == "man"
    assert mode_with_first_tiebreak(["man", "woman"]) == "man"
    assert mode_with_first_tiebreak(["woman", "man", "man", "woman"]) == "woman"


def test_normalize_text():
    assert normalize_text("The Woman, in red!") == ["the", "woman", "in", "red"]


coord = st.integers(0, 12)


@st.composite
def int_boxes(draw):
    x1, y1 = draw(coord), draw(coord)
    return (x1, y1, x1 + draw(st.integers(1, 6)), y1 + draw(st.integers(1, 6)))


@given(int_boxes(), int_boxes())
def test_box_iou_matches_pixel_count(a, b):
    got = box_iou(BBox(*a), BBox(*b))
    assert got == pytest.approx(box_iou_grid(a, b), abs=1e-12)
    assert got == pytest.approx(float(box_iou_exact(a, b)), abs=1e-12)
    assert got == box_iou(BBox(*b), BBox(*a))
    assert 0.0 <= got <= 1.0


@given(st.integers(0, 30), st.integers(0, 10), st.integers(0, 30), st.integers(0, 10))
def test_temporal_iou_matches_frame_sets(s1, l1, s2, l2):
    a, b = (s1, s1 + l1), (s2, s2 + l2)
    got = temporal_iou(TemporalSpan(*a), TemporalSpan(*b))
    assert got == pytest.approx(tiou_frames(a, b), abs=1e-12)
    assert got == temporal_iou(TemporalSpan(*b), TemporalSpan(*a))
