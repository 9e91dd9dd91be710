"""Accuracy of trajectories against ground truth.

The error of a trajectory is the mean euclidean distance between its
points and the true positions over the frames both cover. Trajectories are
paired with ground truth tracks greedily, and the per-trajectory errors are
summarised with a one-sample t interval.

A trajectory is anything exposing ``positions()`` (a frame to
:class:`~trajmap.geometry.Point` mapping) or such a mapping itself.
"""
from __future__ import annotations
from bisect import bisect_left
from dataclasses import asdict, dataclass, replace
import math
from typing import (
    Callable,
    Mapping,
    NamedTuple,
    Optional,
    Protocol,
    Sequence,
    Union,
)

import numpy as np
import pandas as pd

from trajmap.config import EvalConfig, RunConfig
from trajmap.errors import NoOverlap, TooFewSamples
from trajmap.geometry import Point, RipplePair
from trajmap.simulator import Scenario
from trajmap.stabilizer import stabilize
from trajmap.tracker import track

# Two-sided 95% critical values of Student's t, by degrees of freedom.
T_TABLE: dict[int, float] = {
    1: 12.706,
    2: 4.303,
    3: 3.182,
    4: 2.776,
    5: 2.571,
    6: 2.447,
    7: 2.365,
    8: 2.306,
    9: 2.262,
    10: 2.228,
    11: 2.201,
    12: 2.179,
    13: 2.160,
    14: 2.145,
    15: 2.131,
    16: 2.120,
    17: 2.110,
    18: 2.101,
    19: 2.093,
    20: 2.086,
    21: 2.080,
    22: 2.074,
    23: 2.069,
    24: 2.064,
    25: 2.060,
    26: 2.056,
    27: 2.052,
    28: 2.048,
    29: 2.045,
    30: 2.042,
    40: 2.021,
    50: 2.009,
    60: 2.000,
    80: 1.990,
    100: 1.984,
    120: 1.980,
}
T_LIMIT = 1.960
_T_DF = sorted(T_TABLE)


class HasPositions(Protocol):
    def positions(self) -> Mapping[int, Point]:
        ...


Track = Union[HasPositions, Mapping[int, Point]]
Ripples = Union[RipplePair, Mapping[int, RipplePair]]


def _positions(track: Track) -> Mapping[int, Point]:
    if hasattr(track, "positions"):
        return track.positions()
    return track


def t_critical(df: int) -> float:
    """Two-sided 95% critical value of Student's t.

    Between table entries the value is interpolated linearly in ``1/df``.

    Examples
    --------
    >>> t_critical(29)
    2.045
    >>> round(t_critical(35), 3)
    2.03
    >>> t_critical(1000)
    1.96
    """
    if df < 1:
        raise TooFewSamples(f"Need at least 1 degree of freedom, got {df}")
    if df in T_TABLE:
        return T_TABLE[df]
    if df > _T_DF[-1]:
        return T_LIMIT
    i = bisect_left(_T_DF, df)
    lo, hi = _T_DF[i - 1], _T_DF[i]
    frac = (1 / df - 1 / lo) / (1 / hi - 1 / lo)
    return T_TABLE[lo] + frac * (T_TABLE[hi] - T_TABLE[lo])


class TStatistics(NamedTuple):
    mean: float
    std_dev: float
    std_error: float
    ci_low: float
    ci_high: float


def t_interval(n: int, mean: float, std_dev: float) -> TStatistics:
    """Statistics of a sample given its size, mean and standard deviation.

    Examples
    --------
    >>> stats = t_interval(30, 21.32, 3.08)
    >>> round(stats.std_error, 4)
    0.5623
    >>> round(stats.ci_low, 2), round(stats.ci_high, 2)
    (20.17, 22.47)
    """
    if n < 2:
        raise TooFewSamples(f"Need at least 2 samples, got {n}")
    std_error = std_dev / math.sqrt(n)
    half = t_critical(n - 1) * std_error
    return TStatistics(mean, std_dev, std_error, mean - half, mean + half)


def t_statistics(samples: Sequence[float]) -> TStatistics:
    """One-sample t statistics with a 95% confidence interval for the
    mean. The standard deviation uses the ``n - 1`` denominator.

    Examples
    --------
    >>> t_statistics([21.32] * 30)
    TStatistics(mean=21.32, std_dev=0.0, std_error=0.0, ci_low=21.32, ci_high=21.32)
    >>> t_statistics([1.0])
    Traceback (most recent call last):
      ...
    trajmap.errors.TooFewSamples: Need at least 2 samples, got 1
    """
    values = np.asarray(samples, dtype=float)
    if len(values) < 2:
        raise TooFewSamples(f"Need at least 2 samples, got {len(values)}")
    if np.all(values == values[0]):
        mean = float(values[0])
        return TStatistics(mean, 0.0, 0.0, mean, mean)
    return t_interval(
        len(values), float(values.mean()), float(values.std(ddof=1))
    )


def trajectory_error(
    pred: Track, gt: Track, after: Optional[int] = None
) -> float:
    """Mean distance between ``pred`` and ``gt`` over their common frames.

    With ``after``, only frames strictly after it count.

    Examples
    --------
    >>> gt = {0: Point(0, 0), 1: Point(10, 0)}
    >>> trajectory_error({0: Point(3, 4), 1: Point(13, 4)}, gt)
    5.0
    >>> trajectory_error({5: Point(0, 0)}, gt)
    Traceback (most recent call last):
      ...
    trajmap.errors.NoOverlap: Tracks share no frame
    """
    p, g = _positions(pred), _positions(gt)
    frames = sorted(f for f in p if f in g and (after is None or f > after))
    if not frames:
        raise NoOverlap("Tracks share no frame")
    a = np.array([(p[f].x, p[f].y) for f in frames])
    b = np.array([(g[f].x, g[f].y) for f in frames])
    return float(np.hypot(*(a - b).T).mean())


class Match(NamedTuple):
    pred: int
    gt: int
    error: float


def match_tracks(
    preds: Sequence[Track],
    gts: Sequence[Track],
    threshold: float = 50.0,
) -> list[Match]:
    """Greedy pairing of predictions with ground truth tracks.

    The closest unmatched pair (by :func:`trajectory_error`) is taken
    repeatedly while its error is at most ``threshold``. Pairs without a
    common frame are never matched. Ties go to the lower indices.

    Returns
    -------
    list[Match]
        Index of the prediction, index of the ground truth track and their
        error, in matching order.

    Examples
    --------
    >>> gts = [{0: Point(0, 0)}, {0: Point(600, 0)}]
    >>> preds = [{0: Point(601, 0)}, {0: Point(2, 0)}]
    >>> [(m.pred, m.gt) for m in match_tracks(preds, gts)]
    [(0, 1), (1, 0)]
    """
    candidates = []
    for i, pred in enumerate(preds):
        for j, gt in enumerate(gts):
            try:
                error = trajectory_error(pred, gt)
            except NoOverlap:
                continue
            if error <= threshold:
                candidates.append((error, i, j))
    candidates.sort()

    matches = []
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    for error, i, j in candidates:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
        matches.append(Match(i, j, error))
    return matches


def orphans(preds: Sequence[Track], gts: Sequence[Track]) -> list[int]:
    """Indices of predictions sharing no frame with any ground truth
    track.

    Example
    -------
    >>> orphans([{0: Point(0, 0)}, {9: Point(0, 0)}], [{0: Point(1, 1)}])
    [1]
    """
    covered = set().union(*(_positions(gt).keys() for gt in gts))
    return [
        i
        for i, pred in enumerate(preds)
        if covered.isdisjoint(_positions(pred))
    ]


def _ripple_at(ripples: Ripples, frame: int) -> Optional[RipplePair]:
    if isinstance(ripples, RipplePair):
        return ripples
    if frame in ripples:
        return ripples[frame]
    earlier = [f for f in ripples if f <= frame]
    return ripples[max(earlier)] if earlier else None


def arrived(track: Track, ripples: Ripples) -> bool:
    """Whether the last point of ``track`` lies in the ripple pair of its
    last frame."""
    positions = _positions(track)
    if not positions:
        return False
    last = max(positions)
    ripple = _ripple_at(ripples, last)
    return ripple is not None and ripple.contains(positions[last])


class DetectionMetrics(NamedTuple):
    detected_fraction: float
    precision_trajectory: float


def detection_metrics(
    preds: Sequence[Track],
    gts: Sequence[Track],
    ripples: Ripples,
    matches: Optional[Sequence[Match]] = None,
    threshold: float = 50.0,
) -> DetectionMetrics:
    """Share of ground truth tracks that were matched, and share of
    matched trajectories ending inside a ripple area.

    Both are 0 when their denominator is empty.
    """
    if matches is None:
        matches = match_tracks(preds, gts, threshold)
    detected = len(matches) / len(gts) if gts else 0.0
    landed = sum(arrived(preds[m.pred], ripples) for m in matches)
    precision = landed / len(matches) if matches else 0.0
    return DetectionMetrics(detected, precision)


@dataclass(frozen=True)
class NfRow:
    """Evaluation of one tracker run.

    Statistics are NaN when fewer than two trajectories could be scored.
    """

    nf: int
    n: int
    mean: float
    std_dev: float
    std_error: float
    ci_low: float
    ci_high: float
    detected_fraction: float
    precision_trajectory: float


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[NfRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("An evaluation report needs at least one row")

    @property
    def best_nf(self) -> int:
        """Smallest n_f whose mean error is within 1e-9 px of the
        minimum."""
        scored = [r for r in self.rows if not math.isnan(r.mean)]
        if not scored:
            return self.rows[0].nf
        lowest = min(r.mean for r in scored)
        return min(r.nf for r in scored if r.mean <= lowest + 1e-9)

    def row(self, nf: int) -> NfRow:
        for r in self.rows:
            if r.nf == nf:
                return r
        raise KeyError(nf)

    @property
    def detected_fraction(self) -> float:
        return self.row(self.best_nf).detected_fraction

    @property
    def precision_trajectory(self) -> float:
        return self.row(self.best_nf).precision_trajectory

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows])


def evaluate(
    preds: Sequence[Track],
    gts: Sequence[Track],
    ripples: Ripples,
    nf: int,
    cfg: Optional[EvalConfig] = None,
    post_commit: bool = True,
) -> NfRow:
    """Score one set of trajectories.

    With ``post_commit``, errors of trajectories carrying a
    ``committed_frame`` only use their points after that frame; a matched
    trajectory without such points is left out of the statistics.
    """
    cfg = cfg or EvalConfig()
    matches = match_tracks(preds, gts, cfg.match_threshold)
    samples = []
    for m in matches:
        after = None
        if post_commit:
            after = getattr(preds[m.pred], "committed_frame", None)
        try:
            samples.append(trajectory_error(preds[m.pred], gts[m.gt], after))
        except NoOverlap:
            continue

    if len(samples) >= 2:
        stats = t_statistics(samples)
    else:
        mean = float(samples[0]) if samples else math.nan
        stats = TStatistics(mean, math.nan, math.nan, math.nan, math.nan)
    metrics = detection_metrics(preds, gts, ripples, matches)
    return NfRow(nf, len(samples), *stats, *metrics)


def sweep_nf(
    scenario: Scenario,
    cfg: Optional[RunConfig] = None,
    progress: Optional[Callable[[NfRow], None]] = None,
) -> EvalReport:
    """Track ``scenario`` once per commit count in ``cfg.evaluation.nf_range``
    and score every run against the ground truth.

    Detections are stabilised first when the scenario carries camera
    transforms. ``progress`` is called with each finished row.
    """
    cfg = cfg or RunConfig()
    if not scenario.ground_truth:
        raise ValueError("Scenario has no ground truth to evaluate against")
    detections = scenario.detections
    if scenario.transforms is not None:
        detections = stabilize(
            detections,
            scenario.transforms,
            cfg.stabilization,
            cfg.tracker.frame_w,
            cfg.tracker.frame_h,
        )

    lo, hi = cfg.evaluation.nf_range
    rows = []
    for nf in range(lo, hi + 1):
        trajectories = track(
            detections,
            scenario.ripples,
            replace(cfg.tracker, commit_count=nf),
            scenario.n_frames,
        )
        row = evaluate(
            trajectories,
            scenario.ground_truth,
            scenario.ripples,
            nf,
            cfg.evaluation,
        )
        if progress is not None:
            progress(row)
        rows.append(row)
    return EvalReport(tuple(rows))
