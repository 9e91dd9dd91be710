from fractions import Fraction
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from trajmap.errors import InsufficientPoints, SingularSystem
from trajmap.geometry import Point
from trajmap.polyfit import (
    Quadratic,
    fit_curve,
    fit_poly,
    sse,
    tangent_angle,
)


def exact_normal_equations(points, degree=2):
    """Solution of (VᵀV) a = Vᵀ y in rational arithmetic."""
    xs = [Fraction(p.x) for p in points]
    ys = [Fraction(p.y) for p in points]
    size = degree + 1
    rows = [
        [sum(x ** (i + j) for x in xs) for j in range(size)]
        + [sum(x**i * y for x, y in zip(xs, ys))]
        for i in range(size)
    ]
    for col in range(size):
        pivot = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for r in range(size):
            if r != col:
                factor = rows[r][col] / rows[col][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [float(rows[i][size] / rows[i][i]) for i in range(size)]


def random_points(rng, n, half_width=10.0):
    """``n`` points with abscissas spread over ±half_width, at least half
    a grid step apart, in random order."""
    grid = np.linspace(-half_width, half_width, n)
    step = grid[1] - grid[0]
    xs = rng.permutation(grid + rng.uniform(-step / 4, step / 4, n))
    ys = rng.uniform(-10, 10, n)
    return [Point(float(x), float(y)) for x, y in zip(xs, ys)]


def test_matches_normal_equations():
    rng = np.random.default_rng(0)
    for _ in range(100):
        points = random_points(rng, int(rng.integers(3, 12)))
        expected = exact_normal_equations(points)
        assert fit_poly(points).as_tuple() == pytest.approx(
            expected, rel=1e-9, abs=1e-9
        )


@pytest.mark.slow
def test_matches_normal_equations_batch():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        points = random_points(rng, int(rng.integers(3, 30)))
        expected = exact_normal_equations(points)
        assert fit_poly(points).as_tuple() == pytest.approx(
            expected, rel=1e-9, abs=1e-9
        )


def test_linear_fit_matches_normal_equations():
    rng = np.random.default_rng(2)
    for _ in range(50):
        points = random_points(rng, int(rng.integers(2, 12)))
        a1, a2 = exact_normal_equations(points, degree=1)
        q = fit_poly(points, degree=1)
        assert (q.a1, q.a2, q.a3) == pytest.approx(
            (a1, a2, 0.0), rel=1e-9, abs=1e-9
        )


def test_fit_minimises_residuals():
    rng = np.random.default_rng(3)
    for _ in range(50):
        points = random_points(rng, int(rng.integers(3, 20)))
        q = fit_poly(points)
        lowest = sse(q, points)
        for k in range(3):
            for delta in (-1e-3, 1e-3):
                nudged = list(q.as_tuple())
                nudged[k] += delta
                assert sse(Quadratic(*nudged), points) > lowest


def test_fit_follows_translation():
    rng = np.random.default_rng(4)
    for _ in range(50):
        points = random_points(rng, int(rng.integers(3, 20)), 100.0)
        dx, dy = rng.uniform(0, 1800), rng.uniform(-500, 500)
        q = fit_poly(points)
        moved = fit_poly([Point(p.x + dx, p.y + dy) for p in points])
        for p in points:
            assert moved(p.x + dx) == pytest.approx(q(p.x) + dy, abs=1e-6)


def test_linear_fit():
    points = [Point(0, 1), Point(1, 3), Point(2, 5), Point(3, 7)]
    q = fit_poly(points, degree=1)
    assert q.a3 == 0.0
    assert (q.a1, q.a2) == pytest.approx((1.0, 2.0))


@given(
    a1=st.floats(-500, 1500),
    a2=st.floats(-2, 2),
    a3=st.floats(-1e-3, 1e-3),
    x0=st.floats(0, 1700),
    step=st.floats(20, 80),
)
@settings(max_examples=200, deadline=None)
def test_exact_interpolation(a1, a2, a3, x0, step):
    truth = Quadratic(a1, a2, a3)
    points = [Point(x0 + i * step, truth(x0 + i * step)) for i in range(3)]
    q = fit_poly(points)
    for p in points:
        assert abs(q(p.x) - p.y) < 1e-6


def test_fit_ignores_order():
    points = [Point(1900, 100), Point(1850, 140), Point(1790, 210)]
    forward = fit_poly(points).as_tuple()
    backward = fit_poly(points[::-1]).as_tuple()
    assert forward == pytest.approx(backward, rel=1e-12, abs=1e-12)


def test_too_few_points():
    with pytest.raises(InsufficientPoints):
        fit_poly([Point(0, 0), Point(1, 1)])
    with pytest.raises(InsufficientPoints):
        fit_curve([Point(0, 0)])


def test_repeated_abscissa_is_singular():
    with pytest.raises(SingularSystem):
        fit_poly([Point(5, 0), Point(5, 1), Point(5, 2)])
    with pytest.raises(SingularSystem):
        fit_poly([Point(5, 0), Point(5, 1), Point(6, 2)])


def test_curve_falls_back_to_line():
    q = fit_curve([Point(0, 0), Point(10, 5)])
    assert q.a3 == 0.0
    assert q(4) == pytest.approx(2.0)


def test_residuals():
    q = Quadratic(0, 0, 1)
    assert sse(q, [Point(1, 1), Point(2, 4)]) == 0
    assert sse(q, [Point(1, 2), Point(2, 2)]) == 5


def test_tangent_angle_range():
    assert tangent_angle(Quadratic(0, -1, 0), 0) == pytest.approx(-45.0)
    assert -90 < tangent_angle(Quadratic(0, 0, 1e6), 1e3) < 90
    assert math.isclose(tangent_angle(Quadratic(3, 0, 0), 1), 0.0)
