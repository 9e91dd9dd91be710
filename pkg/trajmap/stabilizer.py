"""Camera-motion smoothing applied to detection coordinates.

Per-frame rigid transforms (dx, dy, da) are accumulated into the camera
path ``L``, smoothed into ``χ`` with a moving-window recurrence, and the
difference ``χ - L`` is applied to every detection of the frame. Pixels
are never warped: only coordinates are corrected.

Examples
--------
>>> transforms = [TransformSample(2, 0, 0), TransformSample(0, 0, 0)]
>>> L = cumulative_trajectory(transforms)
>>> chi = smooth_trajectory(L, StabilizationConfig(smoothing_radius=5))
>>> [round(s.dx, 9) for s in chi]
[2.0, 2.0]
"""
from __future__ import annotations
from dataclasses import dataclass
import math
from typing import Mapping, Sequence

import numpy as np

from trajmap.config import StabilizationConfig
from trajmap.errors import EmptyInput, FrameOutOfRange
from trajmap.geometry import Detection, Point


@dataclass(frozen=True, slots=True)
class TransformSample:
    """Rigid motion of one frame: translation in pixels, rotation in
    radians."""

    dx: float
    dy: float
    da: float = 0.0

    def __post_init__(self):
        for name in ("dx", "dy", "da"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Transform {name} must be finite")

    def __add__(self, other: TransformSample) -> TransformSample:
        return TransformSample(
            self.dx + other.dx, self.dy + other.dy, self.da + other.da
        )

    def __sub__(self, other: TransformSample) -> TransformSample:
        return TransformSample(
            self.dx - other.dx, self.dy - other.dy, self.da - other.da
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.da)


IDENTITY = TransformSample(0.0, 0.0, 0.0)


def _to_array(samples: Sequence[TransformSample]) -> np.ndarray:
    if len(samples) == 0:
        raise EmptyInput("Transform sequence is empty")
    return np.array([s.as_tuple() for s in samples], dtype=float)


def _from_array(values: np.ndarray) -> list[TransformSample]:
    return [TransformSample(*map(float, row)) for row in values]


def cumulative_trajectory(
    transforms: Sequence[TransformSample],
) -> list[TransformSample]:
    """Running sum of the per-frame transforms (the camera path ``L``).

    Examples
    --------
    >>> cumulative_trajectory([TransformSample(1, 0, 0)] * 3)
    [TransformSample(dx=1.0, dy=0.0, da=0.0), TransformSample(dx=2.0, dy=0.0, da=0.0), TransformSample(dx=3.0, dy=0.0, da=0.0)]
    >>> cumulative_trajectory([])
    Traceback (most recent call last):
      ...
    trajmap.errors.EmptyInput: Transform sequence is empty
    """
    return _from_array(np.cumsum(_to_array(transforms), axis=0))


def window_means(
    L: Sequence[TransformSample], radius: int, literal_gamma: bool = False
) -> np.ndarray:
    """Mean of ``L`` over the window ``[φ - radius, φ + radius]`` clamped
    to the valid frames, for every φ.

    With ``literal_gamma`` the window sum is divided by ``radius``
    whatever the number of samples it holds.
    """
    values = _to_array(L)
    n = len(values)
    prefix = np.vstack([np.zeros((1, 3)), np.cumsum(values, axis=0)])
    idx = np.arange(n)
    lo = np.clip(idx - radius, 0, n - 1)
    hi = np.clip(idx + radius, 0, n - 1)
    sums = prefix[hi + 1] - prefix[lo]
    counts = (hi - lo + 1).astype(float)
    if literal_gamma:
        counts = np.full(n, float(radius))
    return sums / counts[:, None]


def smooth_trajectory(
    L: Sequence[TransformSample], cfg: StabilizationConfig
) -> list[TransformSample]:
    """Smoothed camera path ``χ``.

    ``χ_0 = L_0`` and ``χ_φ = χ_{φ-1} + M_φ - L_{φ-1}``, where ``M_φ`` is
    the clamped window mean returned by :func:`window_means`.

    Examples
    --------
    >>> cfg = StabilizationConfig(smoothing_radius=1)
    >>> L = [TransformSample(0, 0), TransformSample(10, 0), TransformSample(0, 0)]
    >>> [round(s.dx, 3) for s in smooth_trajectory(L, cfg)]
    [0.0, 3.333, -1.667]
    """
    values = _to_array(L)
    means = window_means(L, cfg.smoothing_radius, cfg.literal_gamma)
    steps = means[1:] - values[:-1]
    chi = np.vstack([values[:1], values[:1] + np.cumsum(steps, axis=0)])
    return _from_array(chi)


def corrections(
    chi: Sequence[TransformSample], L: Sequence[TransformSample]
) -> list[TransformSample]:
    """Per-frame correction ``χ_φ - L_φ``."""
    if len(chi) != len(L):
        raise ValueError(
            f"Smoothed and raw paths differ in length: {len(chi)} != {len(L)}"
        )
    return [c - l for c, l in zip(chi, L)]


def correct_point(
    p: Point, correction: TransformSample, center: Point
) -> Point:
    """Rotate ``p`` about ``center`` by ``correction.da``, then translate.

    Example
    -------
    >>> q = correct_point(
    ...     Point(1060, 540), TransformSample(0, 0, math.pi / 2), Point(960, 540)
    ... )
    >>> round(q.x, 9), round(q.y, 9)
    (960.0, 640.0)
    """
    cos, sin = math.cos(correction.da), math.sin(correction.da)
    rx, ry = p.x - center.x, p.y - center.y
    return Point(
        cos * rx - sin * ry + center.x + correction.dx,
        sin * rx + cos * ry + center.y + correction.dy,
    )


def uncorrect_point(
    p: Point, correction: TransformSample, center: Point
) -> Point:
    """Inverse of :func:`correct_point`."""
    cos, sin = math.cos(correction.da), math.sin(correction.da)
    rx = p.x - correction.dx - center.x
    ry = p.y - correction.dy - center.y
    return Point(
        cos * rx + sin * ry + center.x,
        -sin * rx + cos * ry + center.y,
    )


def apply_stabilization(
    detections: Mapping[int, Sequence[Detection]],
    chi: Sequence[TransformSample],
    L: Sequence[TransformSample],
    frame_w: float = 1920.0,
    frame_h: float = 1080.0,
) -> dict[int, list[Detection]]:
    """Correct every detection with the correction of its frame.

    Box sizes are kept; centroid and box center move together. Rotation
    is about the frame center.

    Examples
    --------
    >>> from trajmap.geometry import BBox
    >>> dets = {0: [Detection.from_box(0, BBox(10, 10, 4, 4))]}
    >>> L = [TransformSample(0, 0)]
    >>> chi = [TransformSample(5, -3)]
    >>> apply_stabilization(dets, chi, L)[0][0].centroid
    Point(x=15.0, y=7.0)
    >>> apply_stabilization({3: []}, chi, L)
    Traceback (most recent call last):
      ...
    trajmap.errors.FrameOutOfRange: Frame 3 has no transform (1 frames covered)
    """
    correction = corrections(chi, L)
    center = Point(frame_w / 2, frame_h / 2)
    stabilized: dict[int, list[Detection]] = {}
    for frame, dets in detections.items():
        if not 0 <= frame < len(correction):
            raise FrameOutOfRange(
                f"Frame {frame} has no transform "
                f"({len(correction)} frames covered)"
            )
        c = correction[frame]
        if c == IDENTITY:
            stabilized[frame] = list(dets)
            continue
        stabilized[frame] = [
            d.moved_to(correct_point(d.centroid, c, center)) for d in dets
        ]
    return stabilized


def shake_path(
    n_frames: int, amplitude: float, period: float
) -> list[TransformSample]:
    """Per-frame transforms of a sinusoidal camera shake.

    The camera position follows ``dx = A sin(2πφ/P)`` and
    ``dy = A/2 sin(4πφ/P)``; the returned samples are its frame-to-frame
    increments, the first one being the position at frame 0, so that
    :func:`cumulative_trajectory` gives the position back.

    Example
    -------
    >>> path = cumulative_trajectory(shake_path(7, 10.0, 24.0))
    >>> round(path[6].dx, 9)
    10.0
    """
    if n_frames < 1:
        raise EmptyInput("Shake needs at least one frame")
    phase = 2 * np.pi * np.arange(n_frames) / period
    position = np.column_stack(
        [
            amplitude * np.sin(phase),
            amplitude / 2 * np.sin(2 * phase),
            np.zeros(n_frames),
        ]
    )
    increments = np.diff(position, axis=0, prepend=np.zeros((1, 3)))
    return _from_array(increments)


def shake_offsets(
    transforms: Sequence[TransformSample], cfg: StabilizationConfig
) -> list[TransformSample]:
    """Correction that stabilisation will apply at every frame for the
    given transforms."""
    L = cumulative_trajectory(transforms)
    return corrections(smooth_trajectory(L, cfg), L)


def stabilize(
    detections: Mapping[int, Sequence[Detection]],
    transforms: Sequence[TransformSample],
    cfg: StabilizationConfig,
    frame_w: float = 1920.0,
    frame_h: float = 1080.0,
) -> dict[int, list[Detection]]:
    """Smooth the camera path of ``transforms`` and correct detections."""
    L = cumulative_trajectory(transforms)
    chi = smooth_trajectory(L, cfg)
    return apply_stabilization(detections, chi, L, frame_w, frame_h)
