"""Geometric value types shared by every stage of the pipeline.

Image coordinates are used throughout: x grows rightward and y grows
downward, so the highest point of a flight has the *smallest* y.
Box boundaries are closed intervals.
"""
from __future__ import annotations
from dataclasses import dataclass
import math
from typing import Iterator, Optional


def _check_finite(**values: float):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")


@dataclass(frozen=True, slots=True)
class Point:
    """A location in pixels.

    Examples
    --------
    >>> Point(3.0, 4.0).distance(Point(0.0, 0.0))
    5.0
    >>> Point(float("nan"), 0.0)
    Traceback (most recent call last):
      ...
    ValueError: x must be finite, got nan
    """

    x: float
    y: float

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y)

    def distance(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def squared_distance(self, other: Point) -> float:
        return (self.x - other.x) ** 2 + (self.y - other.y) ** 2

    def translated(self, dx: float, dy: float) -> Point:
        return Point(self.x + dx, self.y + dy)


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned box given by its center and size, in pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        _check_finite(cx=self.cx, cy=self.cy, w=self.w, h=self.h)
        if self.w <= 0 or self.h <= 0:
            raise ValueError(
                f"Box width and height must be positive, got {self.w}x{self.h}"
            )

    @property
    def center(self) -> Point:
        return Point(self.cx, self.cy)

    @property
    def top_left(self) -> Point:
        return Point(self.cx - self.w / 2, self.cy - self.h / 2)

    @property
    def bottom_right(self) -> Point:
        return Point(self.cx + self.w / 2, self.cy + self.h / 2)

    @classmethod
    def from_corners(cls, top_left: Point, bottom_right: Point) -> BBox:
        """Instantiate from the top-left and bottom-right corners.

        Example
        -------
        >>> BBox.from_corners(Point(90, 95), Point(110, 105))
        BBox(cx=100.0, cy=100.0, w=20, h=10)
        """
        return cls(
            (top_left.x + bottom_right.x) / 2,
            (top_left.y + bottom_right.y) / 2,
            bottom_right.x - top_left.x,
            bottom_right.y - top_left.y,
        )

    def with_center(self, center: Point) -> BBox:
        return BBox(center.x, center.y, self.w, self.h)

    def contains(self, p: Point) -> bool:
        return point_in_box(p, self)


def box_corners(box: BBox) -> tuple[Point, Point]:
    """Top-left and bottom-right corners of a box.

    Examples
    --------
    >>> box_corners(BBox(cx=100, cy=100, w=20, h=10))
    (Point(x=90.0, y=95.0), Point(x=110.0, y=105.0))
    >>> box_corners(BBox(cx=0, cy=0, w=2, h=2))
    (Point(x=-1.0, y=-1.0), Point(x=1.0, y=1.0))
    """
    return box.top_left, box.bottom_right


def point_in_box(p: Point, box: BBox) -> bool:
    """Closed-interval membership test.

    Examples
    --------
    >>> box = BBox(cx=100, cy=100, w=20, h=10)
    >>> point_in_box(Point(110, 105), box)
    True
    >>> point_in_box(Point(110.01, 100), box)
    False
    """
    top_left, bottom_right = box_corners(box)
    return (
        top_left.x <= p.x <= bottom_right.x
        and top_left.y <= p.y <= bottom_right.y
    )


@dataclass(frozen=True, slots=True)
class Detection:
    """One observed object in one frame.

    The centroid must coincide with the box center; use
    :meth:`Detection.from_box` to build one from a box alone.
    """

    frame: int
    centroid: Point
    box: BBox
    id: Optional[str] = None

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("Frame index must be non-negative")
        if self.centroid.distance(self.box.center) > 1e-9:
            raise ValueError(
                f"Centroid {self.centroid} is not the center of {self.box}"
            )

    @classmethod
    def from_box(
        cls, frame: int, box: BBox, id: Optional[str] = None
    ) -> Detection:
        """
        Example
        -------
        >>> Detection.from_box(4, BBox(10, 20, 9, 6)).centroid
        Point(x=10, y=20)
        """
        return cls(frame, box.center, box, id)

    @property
    def x(self) -> float:
        return self.centroid.x

    @property
    def y(self) -> float:
        return self.centroid.y

    def moved_to(self, centroid: Point) -> Detection:
        """Same detection with its centroid (and box center) relocated."""
        return Detection(
            self.frame, centroid, self.box.with_center(centroid), self.id
        )


@dataclass(frozen=True, slots=True)
class RipplePair:
    """The two ripple areas observed at the sea surface in one frame."""

    frame: int
    left: BBox
    right: BBox

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("Frame index must be non-negative")

    @property
    def boxes(self) -> Iterator[BBox]:
        yield self.left
        yield self.right

    @property
    def level(self) -> float:
        """Mean center height of both boxes, used as the sea surface."""
        return (self.left.cy + self.right.cy) / 2

    def contains(self, p: Point) -> bool:
        return any(point_in_box(p, box) for box in self.boxes)

    def within(self, frame_w: float, frame_h: float) -> bool:
        """Whether both boxes lie inside the frame bounds."""
        frame = BBox(frame_w / 2, frame_h / 2, frame_w, frame_h)
        return all(
            point_in_box(box.top_left, frame)
            and point_in_box(box.bottom_right, frame)
            for box in self.boxes
        )

    def ordered(self) -> RipplePair:
        """The same pair with ``left`` being the box with the smaller x.

        Example
        -------
        >>> pair = RipplePair(0, BBox(900, 950, 10, 10), BBox(300, 950, 10, 10))
        >>> pair.ordered().left.cx
        300
        """
        if self.left.cx <= self.right.cx:
            return self
        return RipplePair(self.frame, self.right, self.left)
