import math

from hypothesis import given, strategies as st
from pydantic import ValidationError
import pytest

from trajmap.detector import (
    ObjectClass,
    RawPrediction,
    decode_box,
    decode_frames,
    logistic,
    ripple_pair_from_boxes,
)
from trajmap.errors import NonPositiveReference
from trajmap.geometry import BBox


def raw(frame=0, px=0.0, py=0.0, pw=0.0, ph=0.0, cx=0.0, cy=0.0, **kwargs):
    return RawPrediction(frame, px, py, pw, ph, cx, cy, **kwargs)


def test_decode_formula():
    r = raw(px=1.0, py=-2.0, pw=0.5, ph=-0.25, cx=40, cy=12)
    box = decode_box(r, 13, 36)
    assert box.cx == pytest.approx(40 + 1 / (1 + math.exp(-1.0)))
    assert box.cy == pytest.approx(12 + 1 / (1 + math.exp(2.0)))
    assert box.w == pytest.approx(13 * math.exp(0.5))
    assert box.h == pytest.approx(36 * math.exp(-0.25))


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_offset_stays_in_cell(px, py):
    box = decode_box(raw(px=px, py=py, cx=7, cy=9), 10, 10)
    assert 7 <= box.cx <= 8
    assert 9 <= box.cy <= 10


def test_logistic_is_stable():
    assert logistic(800.0) == 1.0
    assert logistic(-800.0) == 0.0
    assert logistic(3.0) + logistic(-3.0) == pytest.approx(1.0)


def test_invalid_reference():
    with pytest.raises(NonPositiveReference):
        decode_box(raw(), 10, 0)
    with pytest.raises(NonPositiveReference):
        decode_box(raw(), -1, 10)


def test_invalid_prediction():
    with pytest.raises(ValidationError):
        raw(frame=-1)
    with pytest.raises(ValidationError):
        raw(confidence=-0.1)
    with pytest.raises(ValidationError):
        raw(object_class="fish")


def test_confidence_filter():
    raws = [
        raw(cx=100, confidence=0.25),
        raw(cx=200, confidence=0.2499),
        raw(frame=2, cx=300, confidence=1.0),
    ]
    dets, ripples = decode_frames(raws, 10, 10)
    assert sorted(dets) == [0, 2]
    assert [d.x for d in dets[0]] == [100.5]
    assert ripples == {}
    with pytest.raises(ValueError):
        decode_frames(raws, 10, 10, min_confidence=1.5)


def test_ripples_keep_two_most_confident():
    raws = [
        raw(cx=900, confidence=0.5, object_class=ObjectClass.RIPPLE),
        raw(cx=100, confidence=0.9, object_class=ObjectClass.RIPPLE),
        raw(cx=500, confidence=0.8, object_class=ObjectClass.RIPPLE),
    ]
    _, ripples = decode_frames(raws, 10, 10)
    assert (ripples[0].left.cx, ripples[0].right.cx) == (100.5, 500.5)


def test_single_ripple_box_covers_both_sides():
    box = BBox(300, 950, 360, 120)
    pair = ripple_pair_from_boxes(4, [box])
    assert pair.left == pair.right == box
    with pytest.raises(ValueError):
        ripple_pair_from_boxes(4, [])
