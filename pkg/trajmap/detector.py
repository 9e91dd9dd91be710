"""Decoding of raw detector outputs into absolute boxes.

A raw prediction holds the network's logits for the box offset inside its
grid cell and log-scales for its size. Offsets pass through the logistic
function, sizes are exponentiated and multiplied by a reference size
(anchor or image dimension, the caller decides).
"""
from __future__ import annotations
from collections import defaultdict
from enum import Enum
import math
from typing import Annotated, Iterable

from pydantic import Field
from pydantic.dataclasses import dataclass

from trajmap.errors import NonPositiveReference
from trajmap.geometry import BBox, Detection, RipplePair

DEFAULT_MIN_CONFIDENCE = 0.25


class ObjectClass(str, Enum):
    """Object classes emitted by the detector."""

    NUTRIMENT = "nutriment"
    RIPPLE = "ripple"


@dataclass(frozen=True)
class RawPrediction:
    """One undecoded box.

    Examples
    --------
    >>> RawPrediction(0, 0, 0, 0, 0, 10, 10, confidence=1.5)  # doctest: +IGNORE_EXCEPTION_DETAIL
    Traceback (most recent call last):
      ...
    pydantic_core._pydantic_core.ValidationError: 1 validation error for RawPrediction
    """

    frame: Annotated[int, Field(ge=0)]
    px: float
    py: float
    pw: float
    ph: float
    cell_x: float
    cell_y: float
    confidence: Annotated[float, Field(ge=0, le=1)] = 1.0
    object_class: ObjectClass = ObjectClass.NUTRIMENT


def logistic(v: float) -> float:
    """Numerically stable logistic function.

    Examples
    --------
    >>> logistic(0.0)
    0.5
    >>> round(logistic(2.0), 4)
    0.8808
    >>> logistic(-1000.0)
    0.0
    """
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    z = math.exp(v)
    return z / (1.0 + z)


def decode_box(r: RawPrediction, ref_w: float, ref_h: float) -> BBox:
    """Absolute box of a raw prediction.

    Examples
    --------
    >>> decode_box(RawPrediction(0, 0, 0, 0, 0, 100, 200), 13, 36)
    BBox(cx=100.5, cy=200.5, w=13.0, h=36.0)
    >>> decode_box(RawPrediction(0, 0, 0, math.log(2), 0, 0, 0), 10, 1).w
    20.0
    >>> decode_box(RawPrediction(0, 0, 0, 0, 0, 0, 0), 0, 1)
    Traceback (most recent call last):
      ...
    trajmap.errors.NonPositiveReference: Reference size must be positive, got 0x1
    """
    if not (ref_w > 0 and ref_h > 0):
        raise NonPositiveReference(
            f"Reference size must be positive, got {ref_w}x{ref_h}"
        )
    return BBox(
        cx=logistic(r.px) + r.cell_x,
        cy=logistic(r.py) + r.cell_y,
        w=math.exp(r.pw) * ref_w,
        h=math.exp(r.ph) * ref_h,
    )


def ripple_pair_from_boxes(frame: int, boxes: list[BBox]) -> RipplePair:
    """Pair of the first two boxes ordered by center x; a lone box stands
    for both sides."""
    if not boxes:
        raise ValueError(f"No ripple box in frame {frame}")
    if len(boxes) == 1:
        return RipplePair(frame, boxes[0], boxes[0])
    return RipplePair(frame, boxes[0], boxes[1]).ordered()


def decode_frames(
    raws: Iterable[RawPrediction],
    ref_w: float,
    ref_h: float,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> tuple[dict[int, list[Detection]], dict[int, RipplePair]]:
    """Decode a prediction stream into per-frame detections and ripples.

    Predictions below ``min_confidence`` are discarded. Per frame, the two
    most confident ripple boxes form the :class:`RipplePair`, ordered by
    center x; a lone ripple box stands for both sides.

    Examples
    --------
    >>> raws = [
    ...     RawPrediction(0, 0, 0, 0, 0, 100, 200, 0.9),
    ...     RawPrediction(0, 0, 0, 0, 0, 500, 200, 0.1),
    ...     RawPrediction(0, 0, 0, 0, 0, 900, 950, 0.8, "ripple"),
    ...     RawPrediction(0, 0, 0, 0, 0, 300, 950, 0.7, "ripple"),
    ... ]
    >>> dets, ripples = decode_frames(raws, 10, 10)
    >>> [d.x for d in dets[0]]
    [100.5]
    >>> ripples[0].left.cx, ripples[0].right.cx
    (300.5, 900.5)
    """
    if not 0 <= min_confidence <= 1:
        raise ValueError("min_confidence must lie within [0, 1]")
    detections: dict[int, list[Detection]] = defaultdict(list)
    ripple_boxes: dict[int, list[tuple[float, BBox]]] = defaultdict(list)
    for raw in raws:
        if raw.confidence < min_confidence:
            continue
        box = decode_box(raw, ref_w, ref_h)
        if raw.object_class is ObjectClass.RIPPLE:
            ripple_boxes[raw.frame].append((raw.confidence, box))
        else:
            detections[raw.frame].append(Detection.from_box(raw.frame, box))

    ripples: dict[int, RipplePair] = {}
    for frame, scored in ripple_boxes.items():
        # Stable sort keeps input order among equal confidences
        best = sorted(scored, key=lambda item: -item[0])[:2]
        ripples[frame] = ripple_pair_from_boxes(
            frame, [box for _, box in best]
        )
    return dict(detections), ripples

