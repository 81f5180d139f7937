import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garmentwarp.landmarks import (
    AnnotationError,
    DegenerateControlPoints,
    Landmark,
    LandmarkAnnotation,
    build_control_pairs,
    denormalize_landmarks,
    normalize_landmarks,
    parse_annotation,
    serialize_annotation,
)


def make_doc(n_human=9, n_fashion=6, w=320, h=240):
    rng = np.random.default_rng(7)
    doc = {
        "image": "img.png",
        "width": w,
        "height": h,
        "space": "pixel",
        "human_landmarks": [[float(rng.uniform(0, w)), float(rng.uniform(0, h)), True] for _ in range(n_human)],
    }
    if n_fashion:
        doc["fashion_landmarks"] = [
            [float(rng.uniform(0, w)), float(rng.uniform(0, h)), True] for _ in range(n_fashion)
        ]
    return doc


def test_parse_full_annotation():
    a = parse_annotation(json.dumps(make_doc()).encode())
    assert len(a.human_landmarks) + len(a.fashion_landmarks) == 15
    assert a.coordinate_space == "pixel"


def test_canonical_round_trip_is_byte_identical():
    raw = serialize_annotation(parse_annotation(json.dumps(make_doc())))
    assert serialize_annotation(parse_annotation(raw)) == raw


def test_serialize_is_deterministic_and_sorted():
    a = parse_annotation(json.dumps(make_doc()))
    assert serialize_annotation(a) == serialize_annotation(a)
    keys = list(json.loads(serialize_annotation(a)))
    assert keys == sorted(keys)


def test_missing_fashion_landmarks_omitted():
    a = parse_annotation(json.dumps(make_doc(n_fashion=0)))
    assert a.fashion_landmarks is None
    assert "fashion_landmarks" not in json.loads(serialize_annotation(a))


def test_six_decimal_precision():
    doc = make_doc()
    doc["human_landmarks"][0] = [1.23456789, 2.0, True]
    out = json.loads(serialize_annotation(parse_annotation(json.dumps(doc))))
    assert out["human_landmarks"][0][0] == 1.234568


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["human_landmarks"].pop(),
        lambda d: d["fashion_landmarks"].pop(),
        lambda d: d["human_landmarks"][0].__setitem__(0, 400.0),
        lambda d: d["human_landmarks"][0].__setitem__(1, -1.0),
        lambda d: d.__setitem__("width", 0),
        lambda d: d.__setitem__("space", "polar"),
        lambda d: d.pop("height"),
    ],
)
def test_schema_violations(mutate):
    doc = make_doc()
    mutate(doc)
    with pytest.raises(AnnotationError):
        parse_annotation(json.dumps(doc))


def test_malformed_json():
    with pytest.raises(AnnotationError):
        parse_annotation(b'{"image": ')


def test_normalize_center_and_origin():
    doc = make_doc()
    doc["human_landmarks"][0] = [160.0, 120.0, True]
    doc["human_landmarks"][1] = [0.0, 0.0, True]
    n = normalize_landmarks(parse_annotation(json.dumps(doc)))
    assert n.coordinate_space == "normalized"
    assert n.human_landmarks[0].as_tuple() == (0.5, 0.5)
    assert n.human_landmarks[1].as_tuple() == (0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(
    w=st.integers(1, 4000),
    h=st.integers(1, 4000),
    fx=st.lists(st.floats(0, 1), min_size=15, max_size=15),
    fy=st.lists(st.floats(0, 1), min_size=15, max_size=15),
)
def test_normalize_round_trip_within_half_pixel(w, h, fx, fy):
    lms = [Landmark(x * w, y * h) for x, y in zip(fx, fy)]
    a = LandmarkAnnotation("i.png", w, h, lms[:9], lms[9:])
    # through the 6-decimal file format, as in real use
    n = parse_annotation(serialize_annotation(normalize_landmarks(a)))
    back = denormalize_landmarks(n)
    for p, q in zip(a.human_landmarks + a.fashion_landmarks, back.human_landmarks + back.fashion_landmarks):
        assert abs(p.x - q.x) <= 0.5 and abs(p.y - q.y) <= 0.5


def _norm_ann(xy, visible=None):
    visible = visible or [True] * 9
    return LandmarkAnnotation(
        "a.png", 100, 100, [Landmark(x, y, v) for (x, y), v in zip(xy, visible)], coordinate_space="normalized"
    )


@pytest.fixture
def pose_pair():
    rng = np.random.default_rng(3)
    return rng.uniform(0.1, 0.9, (9, 2)), rng.uniform(0.1, 0.9, (9, 2)), rng.uniform(0.1, 0.9, (6, 2)), rng.uniform(0.1, 0.9, (6, 2))


def test_all_visible_gives_fifteen(pose_pair):
    m, p, c, cp = pose_pair
    pairs = build_control_pairs(
        _norm_ann(m), _norm_ann(p), [Landmark(*v) for v in c], [Landmark(*v) for v in cp]
    )
    assert pairs.count == 15
    np.testing.assert_array_equal(pairs.source, np.vstack([m, c]))
    np.testing.assert_array_equal(pairs.target, np.vstack([p, cp]))


def test_invisible_on_person_side_dropped_both(pose_pair):
    m, p, c, cp = pose_pair
    vis = [True] * 9
    vis[4] = False
    pairs = build_control_pairs(
        _norm_ann(m), _norm_ann(p, vis), [Landmark(*v) for v in c], [Landmark(*v) for v in cp]
    )
    assert pairs.count == 14
    keep = [i for i in range(15) if i != 4]
    np.testing.assert_array_equal(pairs.source, np.vstack([m, c])[keep])
    np.testing.assert_array_equal(pairs.target, np.vstack([p, cp])[keep])


def test_two_visible_pairs_is_an_error(pose_pair):
    m, p, c, cp = pose_pair
    vis = [True, True] + [False] * 7
    with pytest.raises(DegenerateControlPoints):
        build_control_pairs(
            _norm_ann(m, vis),
            _norm_ann(p),
            [Landmark(*v, visible=False) for v in c],
            [Landmark(*v) for v in cp],
        )


def test_collinear_pairs_is_an_error():
    line = [(0.1 * i, 0.1 * i) for i in range(1, 10)]
    with pytest.raises(DegenerateControlPoints):
        build_control_pairs(
            _norm_ann(line),
            _norm_ann(line),
            [Landmark(0.05 * i, 0.05 * i) for i in range(6)],
            [Landmark(0.05 * i, 0.05 * i) for i in range(6)],
        )


@settings(max_examples=40, deadline=None)
@given(hidden=st.sets(st.integers(0, 14), max_size=10), seed=st.integers(0, 1000))
def test_pairing_is_consistent_under_occlusion(hidden, seed):
    rng = np.random.default_rng(seed)
    m, p = rng.uniform(0.1, 0.9, (9, 2)), rng.uniform(0.1, 0.9, (9, 2))
    c, cp = rng.uniform(0.1, 0.9, (6, 2)), rng.uniform(0.1, 0.9, (6, 2))
    vis = [i not in hidden for i in range(15)]
    pairs = build_control_pairs(
        _norm_ann(m, vis[:9]),
        _norm_ann(p),
        [Landmark(*v, visible=vis[9 + i]) for i, v in enumerate(c)],
        [Landmark(*v) for v in cp],
    )
    src, dst = np.vstack([m, c]), np.vstack([p, cp])
    assert pairs.count == 15 - len(hidden) <= 15
    # every surviving source point is still paired with its own target
    for s, t in zip(pairs.source, pairs.target):
        i = int(np.flatnonzero((src == s).all(axis=1))[0])
        np.testing.assert_array_equal(dst[i], t)
