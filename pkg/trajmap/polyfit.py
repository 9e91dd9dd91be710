"""Least-squares polynomial fits of y over x through the normal equations.

The Vandermonde system ``V a = y`` is solved as ``a = (VᵀV)⁻¹ Vᵀ y`` in
closed form on plain floats. Abscissas are centered on their mean and
scaled to [-1, 1] before forming ``VᵀV``: with x up to ~1920 px the raw x⁴
entries reach 1e13 and the 3×3 solve loses most of its digits otherwise.
"""
from __future__ import annotations
from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from trajmap.errors import InsufficientPoints, SingularSystem
from trajmap.geometry import Point

SINGULAR_TOLERANCE = 1e-12


@dataclass(frozen=True, slots=True)
class Quadratic:
    """``y(x) = a3·x² + a2·x + a1``.

    Examples
    --------
    >>> Quadratic(1, 2, 3)(2)
    17
    >>> Quadratic(0, 1, 0).slope(123.0)
    1.0
    """

    a1: float
    a2: float
    a3: float = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Coefficient {name} must be finite")

    def __call__(self, x: float) -> float:
        return self.a3 * x * x + self.a2 * x + self.a1

    def slope(self, x: float) -> float:
        return 2 * self.a3 * x + self.a2

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation."""
        return (self.a3 * xs + self.a2) * xs + self.a1

    def roots(self, y: float) -> list[float]:
        """Real abscissas where the curve reaches ``y``, ascending.

        Examples
        --------
        >>> Quadratic(0, 0, 1).roots(4)
        [-2.0, 2.0]
        >>> Quadratic(5, 0, 0).roots(1)
        []
        """
        a, b, c = self.a3, self.a2, self.a1 - y
        if abs(a) < 1e-15:
            return [] if b == 0 else [-c / b]
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        root = math.sqrt(disc)
        return sorted({(-b - root) / (2 * a), (-b + root) / (2 * a)})

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a1, self.a2, self.a3)


def fit_poly(points: Sequence[Point], degree: int = 2) -> Quadratic:
    """Least-squares fit of degree 1 or 2.

    Parameters
    ----------
    points
        Samples ordered as observed; order does not affect the result.
    degree
        1 for a line (``a3 = 0``), 2 for a parabola.

    Examples
    --------
    >>> q = fit_poly([Point(0, 0), Point(1, 1), Point(2, 4)])
    >>> [round(a, 9) + 0.0 for a in q.as_tuple()]
    [0.0, 0.0, 1.0]
    >>> type(fit_poly([Point(1, 3), Point(2, 5)], degree=1).a1)
    <class 'float'>
    >>> fit_poly([Point(0, 3), Point(1, 3)], degree=2)
    Traceback (most recent call last):
      ...
    trajmap.errors.InsufficientPoints: Degree 2 fit needs at least 3 points, got 2
    """
    if degree not in (1, 2):
        raise ValueError(f"Unsupported degree: {degree}")
    n = len(points)
    if n < degree + 1:
        raise InsufficientPoints(
            f"Degree {degree} fit needs at least {degree + 1} points, "
            f"got {n}"
        )
    xs = [float(p.x) for p in points]
    ys = [float(p.y) for p in points]
    if len(set(xs)) < degree + 1:
        raise SingularSystem(
            f"Degree {degree} fit needs {degree + 1} distinct x values"
        )

    mean = math.fsum(xs) / n
    spread = max(abs(x - mean) for x in xs)
    # Power sums of u = (x - mean) / spread, |u| <= 1
    s1 = s2 = s3 = s4 = t0 = t1 = t2 = 0.0
    for x, y in zip(xs, ys):
        u = (x - mean) / spread
        u2 = u * u
        s1 += u
        s2 += u2
        s3 += u2 * u
        s4 += u2 * u2
        t0 += y
        t1 += u * y
        t2 += u2 * y

    if degree == 1:
        det = n * s2 - s1 * s1
        if det < SINGULAR_TOLERANCE:
            raise SingularSystem(f"Normal matrix is singular (det={det:g})")
        c0 = (s2 * t0 - s1 * t1) / det
        c1 = (n * t1 - s1 * t0) / det
        c2 = 0.0
    else:
        # Cofactors of the symmetric normal matrix
        k00 = s2 * s4 - s3 * s3
        k01 = s2 * s3 - s1 * s4
        k02 = s1 * s3 - s2 * s2
        k11 = n * s4 - s2 * s2
        k12 = s1 * s2 - n * s3
        k22 = n * s2 - s1 * s1
        det = n * k00 + s1 * k01 + s2 * k02
        if det < SINGULAR_TOLERANCE:
            raise SingularSystem(f"Normal matrix is singular (det={det:g})")
        c0 = (k00 * t0 + k01 * t1 + k02 * t2) / det
        c1 = (k01 * t0 + k11 * t1 + k12 * t2) / det
        c2 = (k02 * t0 + k12 * t1 + k22 * t2) / det

    # Undo the scaling and centering: y = b0 + b1 (x - m) + b2 (x - m)²
    b0, b1, b2 = c0, c1 / spread, c2 / (spread * spread)
    return Quadratic(
        a1=b0 - b1 * mean + b2 * mean * mean,
        a2=b1 - 2 * b2 * mean,
        a3=b2,
    )


def fit_curve(points: Sequence[Point]) -> Quadratic:
    """Fit used for limit curves: quadratic, or a line for two points.

    Example
    -------
    >>> fit_curve([Point(1900, 500), Point(300, 1000)]).a3
    0.0
    """
    if len(points) < 2:
        raise InsufficientPoints(
            f"A curve needs at least 2 points, got {len(points)}"
        )
    return fit_poly(points, degree=min(2, len(points) - 1))


def eval_poly(q: Quadratic, x: float) -> float:
    """
    Examples
    --------
    >>> eval_poly(Quadratic(0, 0, 1), 3)
    9
    >>> eval_poly(Quadratic(5, 0, 0), 1000)
    5
    """
    return q(x)


def tangent_angle(q: Quadratic, x: float) -> float:
    """Inclination of the curve at ``x``, in degrees within (-90, 90).

    Examples
    --------
    >>> round(tangent_angle(Quadratic(0, 1, 0), 7.0), 9)
    45.0
    >>> round(tangent_angle(Quadratic(0, 0, 0.5), 1.0), 9)
    45.0
    """
    return math.degrees(math.atan(q.slope(x)))


def sse(q: Quadratic, points: Sequence[Point]) -> float:
    """Sum of squared vertical residuals."""
    return sum((p.y - q(p.x)) ** 2 for p in points)
