import json

import pytest
from hypothesis import given, strategies as st

from tubeground.core import BBox, DataError, Detection, GroundTruthAnnotation, QueryRecord, SubActionPhrase, TemporalSpan, Tubelet
from tubeground.grounding import Prediction
from tubeground.io import (
    VideoMeta,
    annotation_from_dict,
    annotation_to_dict,
    detection_from_dict,
    detection_to_dict,
    dumps,
    load_records,
    prediction_from_dict,
    prediction_to_dict,
    query_from_dict,
    query_to_dict,
    rounded,
    trm_span_from_dict,
    trm_span_to_dict,
    tubelet_from_dict,
    tubelet_to_dict,
    video_from_dict,
    video_to_dict,
    write_jsonl,
)

num = st.floats(0, 500, allow_nan=False).map(lambda x: round(x, 2))


@st.composite
def boxes(draw):
    x, y = draw(num), draw(num)
    return BBox(x, y, x + draw(st.floats(0.5, 100)), y + draw(st.floats(0.5, 100)))


@st.composite
def detections(draw, frame=None):
    emb = draw(st.none() | st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
    return Detection(
        frame if frame is not None else draw(st.integers(0, 1000)),
        draw(boxes()),
        draw(st.floats(0, 1)),
        tuple(draw(st.lists(st.sampled_from(["man", "woman", "person woman"]), min_size=1, max_size=2))),
        emb,
    )


def roundtrip(d):
    return json.loads(dumps(d))


@given(detections())
def test_detection_roundtrip(det):
    assert detection_from_dict(roundtrip(detection_to_dict(det, "v"))) == det


@given(st.lists(st.integers(0, 500), min_size=1, max_size=6, unique=True), st.data())
def test_tubelet_roundtrip(frames, data):
    t = Tubelet("t7", tuple(data.draw(detections(f)) for f in sorted(frames)), 2.5)
    assert tubelet_from_dict(roundtrip(tubelet_to_dict(t, "v"))) == ("v", t)


@given(st.integers(0, 50), st.integers(0, 20), st.data())
def test_annotation_and_prediction_roundtrip(start, n, data):
    span = TemporalSpan(start, start + n, 5.0)
    bx = {f: data.draw(boxes()) for f in span.frames()}
    a = GroundTruthAnnotation("v", span, bx)
    assert annotation_from_dict(roundtrip(annotation_to_dict(a))) == a
    p = Prediction("v", "t1", span, bx, {"t1": 0.25}, True)
    back = prediction_from_dict(roundtrip(prediction_to_dict(p)))
    assert back == p and back.boxes == p.boxes and back.scores == p.scores
    assert trm_span_from_dict(roundtrip(trm_span_to_dict("v", span)))[1] == span


@given(st.integers(1, 4), st.booleans(), st.none() | st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_query_roundtrip(n, with_idx, emb):
    subs = {
        k: tuple(SubActionPhrase(f"p{k}{s}", tuple(range(s, s + k)) if with_idx else None) for s in range(1, n - k + 2))
        for k in range(1, n + 1)
    }
    q = QueryRecord("v", "cap", "The man", subs, emb)
    back = query_from_dict(roundtrip(query_to_dict(q)))
    assert back == q


def test_video_roundtrip_and_validation():
    m = VideoMeta("v", 5.0, 20)
    assert video_from_dict(roundtrip(video_to_dict(m))) == m
    with pytest.raises(ValueError):
        video_from_dict({"video_id": "v", "fps_sampled": 0})


def test_bare_string_sub_actions():
    q = query_from_dict({"video_id": "v", "caption": "c", "subject_phrase": "The man", "sub_actions": {"1": ["a", "b"], "2": ["a b"]}})
    assert q.sub_actions[1][0].action_indices is None


def test_load_records_reports_line_numbers(tmp_path):
    p = tmp_path / "d.jsonl"
    good = dumps(detection_to_dict(Detection(0, BBox(0, 0, 1, 1), 0.5, ("man",)), "v"))
    p.write_text(good + "\n" + '{"video_id": "v", "frame": 1}\n' + good + "\n")
    with pytest.raises(DataError, match=r"d.jsonl:2: missing field"):
        load_records(p, detection_from_dict)
    p.write_text("not json\n")
    with pytest.raises(DataError, match=r":1: invalid JSON"):
        load_records(p, detection_from_dict)


def test_rounded_and_stable_bytes(tmp_path):
    assert rounded(0.1 + 0.2) == 0.3
    assert str(rounded(-1e-15)) == "0.0"
    a, b = tmp_path / "a", tmp_path / "b"
    write_jsonl(a, [{"b": 1, "a": [1.5]}])
    write_jsonl(b, [{"a": [1.5], "b": 1}])
    assert a.read_bytes() == b.read_bytes() == b'{"a":[1.5],"b":1}\n'
