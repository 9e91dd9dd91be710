"""Trajectory mapping of ballistic objects by detection.

Trajectories are seeded from detections near the feeder edge of the frame
(``x >= frame_w * cut_fraction``) and grow toward decreasing x. In every
frame, each live trajectory only considers detections lying between its
upper and lower limit curves, one plausible step ahead of its last
detection along its heading. It picks the closest one and refits. When
nothing qualifies, the next position is extrapolated from the fitted
quadratic, coasted, or held in place for a lone seed. Trajectories end
when they reach a ripple area, leave the frame or miss too many frames in
a row.

Image coordinates are used: the upper limit curve has the *smaller* y.

The functions of this module are pure; :class:`Tracker` holds the state of
a run.
"""
from __future__ import annotations
from dataclasses import dataclass, replace
from enum import Enum
import math
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from trajmap.config import TrackerConfig
from trajmap.errors import (
    InvariantViolation,
    MissingRipple,
    OutOfOrderFrame,
    SingularSystem,
    TooFewPoints,
)
from trajmap.geometry import BBox, Detection, Point, RipplePair, box_corners
from trajmap.polyfit import Quadratic, fit_curve, fit_poly


class PointSource(str, Enum):
    """Origin of a trajectory point."""

    DETECTED = "detected"
    EXTRAPOLATED = "extrapolated"


class TrajectoryState(str, Enum):
    GROWING = "growing"
    COMMITTED = "committed"
    TERMINATED = "terminated"


class EndReason(str, Enum):
    """Why a trajectory stopped."""

    ARRIVED = "arrived"
    EXITED = "exited"
    LOST = "lost"


@dataclass(frozen=True, slots=True)
class TrackPoint:
    frame: int
    point: Point
    source: PointSource = PointSource.DETECTED

    @property
    def detected(self) -> bool:
        return self.source is PointSource.DETECTED


def _fit_limit(points: Sequence[Point]) -> Quadratic:
    try:
        return fit_curve(points)
    except SingularSystem:
        # Keep the latest point of each abscissa
        unique = list({p.x: p for p in points}.values())
        return fit_curve(unique)


@dataclass(frozen=True, slots=True)
class LimitPair:
    """Upper and lower limit curves with the points they are fitted on.

    Examples
    --------
    >>> limits = LimitPair.build(
    ...     [Point(1900, 500), Point(1010, 500), Point(100, 900)],
    ...     [Point(1900, 500), Point(300, 1000)],
    ... )
    >>> limits.lower_curve.a3
    0.0
    >>> limits.contains(Point(1800, 520))
    True
    """

    upper_points: tuple[Point, ...]
    lower_points: tuple[Point, ...]
    upper_curve: Quadratic
    lower_curve: Quadratic

    @classmethod
    def build(
        cls, upper_points: Sequence[Point], lower_points: Sequence[Point]
    ) -> LimitPair:
        if len(upper_points) < 2 or len(lower_points) < 2:
            raise ValueError("Limit curves need at least two points each")
        return cls(
            tuple(upper_points),
            tuple(lower_points),
            _fit_limit(upper_points),
            _fit_limit(lower_points),
        )

    def contains(self, p: Point) -> bool:
        """Whether ``p`` lies between both curves, bounds included."""
        return bool(self.upper_curve(p.x) <= p.y <= self.lower_curve(p.x))


@dataclass(frozen=True)
class Trajectory:
    """A time-ordered chain of points believed to be one object.

    ``points`` holds both detected and extrapolated points, one per frame.
    ``curve`` is the quadratic fitted on the detected points once there
    are three of them; it is frozen when the trajectory commits.
    ``max_height_samples`` holds one highest-point sample per accepted
    detection.
    """

    id: int
    points: tuple[TrackPoint, ...]
    limits: LimitPair
    max_height_samples: tuple[Point, ...]
    curve: Optional[Quadratic] = None
    state: TrajectoryState = TrajectoryState.GROWING
    end_reason: Optional[EndReason] = None
    committed_frame: Optional[int] = None
    misses: int = 0

    @property
    def seed(self) -> TrackPoint:
        return self.points[0]

    @property
    def newest(self) -> TrackPoint:
        return self.points[-1]

    @property
    def accepted(self) -> list[Point]:
        return [tp.point for tp in self.points if tp.detected]

    @property
    def last_accepted(self) -> TrackPoint:
        for tp in reversed(self.points):
            if tp.detected:
                return tp
        raise InvariantViolation(f"Trajectory {self.id} has no detection")

    @property
    def n_accepted(self) -> int:
        return sum(tp.detected for tp in self.points)

    @property
    def is_live(self) -> bool:
        return self.state is not TrajectoryState.TERMINATED

    @property
    def is_committed(self) -> bool:
        """Whether the trajectory ever reached the commit count."""
        return self.committed_frame is not None

    @property
    def status(self) -> str:
        """End reason once terminated, state otherwise."""
        if self.end_reason is not None:
            return self.end_reason.value
        return self.state.value

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    def positions(self) -> dict[int, Point]:
        """Point of every frame."""
        return {tp.frame: tp.point for tp in self.points}


def _append(traj: Trajectory, tp: TrackPoint) -> tuple[TrackPoint, ...]:
    if tp.frame != traj.newest.frame + 1:
        raise InvariantViolation(
            f"Trajectory {traj.id}: frame {tp.frame} does not follow "
            f"frame {traj.newest.frame}"
        )
    return traj.points + (tp,)


def target_box(
    curve: Optional[Quadratic],
    newest_x: float,
    ripple: RipplePair,
    frame_w: float,
) -> BBox:
    """Ripple box the trajectory is heading to.

    The projected landing is where the curve reaches the mean ripple
    height ahead of ``newest_x`` within the frame; the box whose center is
    nearest to it is the target. Without a curve or a landing, the left
    box is used.

    Examples
    --------
    >>> from trajmap.geometry import BBox
    >>> pair = RipplePair(0, BBox(300, 950, 360, 120), BBox(700, 950, 360, 120))
    >>> target_box(None, 1800.0, pair, 1920).cx
    300
    >>> target_box(Quadratic(950 - 0.001 * 720**2, 0, 0.001), 1500.0, pair, 1920).cx
    700
    """
    if curve is None:
        return ripple.left
    ahead = [
        x
        for x in curve.roots(ripple.level)
        if 0 <= x <= frame_w and x < newest_x
    ]
    if not ahead:
        return ripple.left
    landing = max(ahead)
    return min(ripple.boxes, key=lambda box: abs(box.cx - landing))


def max_height_sample(
    frame_dets: Sequence[Detection], alpha: Point, frame_w: float
) -> Point:
    """Highest point sample of a frame: halfway between the target corner
    and the frame edge, at the smallest centroid y of the frame."""
    return Point(
        (alpha.x + frame_w) / 2, min(d.y for d in frame_dets)
    )


def _limits(
    accepted: Sequence[Point],
    heights: Sequence[Point],
    target: BBox,
) -> LimitPair:
    alpha, theta = box_corners(target)
    mean_height = Point(
        sum(p.x for p in heights) / len(heights),
        sum(p.y for p in heights) / len(heights),
    )
    return LimitPair.build(
        [*accepted, mean_height, alpha], [accepted[0], theta]
    )


def seed_trajectories(
    frame_dets: Sequence[Detection],
    ripple: Optional[RipplePair],
    cfg: TrackerConfig,
    all_frame_dets: Optional[Sequence[Detection]] = None,
    first_id: int = 0,
) -> list[Trajectory]:
    """Start one trajectory per detection in the cut band.

    Parameters
    ----------
    frame_dets
        Detections available for seeding.
    ripple
        Ripple areas of the frame.
    all_frame_dets
        Every detection of the frame, used for the highest point sample.
        Defaults to ``frame_dets``.
    first_id
        Identifier of the first new trajectory; the others follow.

    Examples
    --------
    >>> from trajmap.geometry import BBox
    >>> box = BBox.from_corners(Point(100, 900), Point(300, 1000))
    >>> pair = RipplePair(0, box, box)
    >>> dets = [Detection.from_box(0, BBox(x, 500, 9, 6)) for x in (1800, 1700)]
    >>> [t.seed.point.x for t in seed_trajectories(dets, pair, TrackerConfig())]
    [1800]
    """
    band = [
        d
        for d in frame_dets
        if cfg.frame_w * cfg.cut_fraction <= d.x <= cfg.frame_w
    ]
    if not band:
        return []
    if ripple is None:
        raise MissingRipple("No ripple area available to seed trajectories")
    ripple = ripple.ordered()
    band.sort(key=lambda d: (-d.x, d.y))
    target = ripple.left
    alpha, _ = box_corners(target)
    height = max_height_sample(
        list(all_frame_dets or ()) + band, alpha, cfg.frame_w
    )
    seeds = []
    for offset, det in enumerate(band):
        seeds.append(
            Trajectory(
                id=first_id + offset,
                points=(TrackPoint(det.frame, det.centroid),),
                limits=_limits([det.centroid], [height], target),
                max_height_samples=(height,),
            )
        )
    return seeds


def _gate_mask(
    traj: Trajectory, xs: np.ndarray, ys: np.ndarray, cfg: TrackerConfig
) -> np.ndarray:
    last = traj.last_accepted
    elapsed = traj.newest.frame + 1 - last.frame
    lo, hi = cfg.step_range
    step = last.point.x - xs
    mask = (step > 0) & (lo * elapsed <= step) & (step <= hi * elapsed)
    if not mask.any():
        return mask

    limits = traj.limits
    mask &= limits.upper_curve.evaluate(xs) <= ys
    mask &= ys <= limits.lower_curve.evaluate(xs)
    # Heading of travel toward decreasing x, level until there is a curve
    slope = 0.0 if traj.curve is None else traj.curve.slope(last.point.x)
    heading = math.atan2(-slope, -1.0)
    segment = np.arctan2(ys - last.point.y, xs - last.point.x)
    diff = (np.degrees(segment - heading) + 180.0) % 360.0 - 180.0
    return mask & (np.abs(diff) <= cfg.angle_tolerance)


def _coordinates(dets: Sequence[Detection]) -> tuple[np.ndarray, np.ndarray]:
    xs = np.fromiter((d.x for d in dets), dtype=float, count=len(dets))
    ys = np.fromiter((d.y for d in dets), dtype=float, count=len(dets))
    return xs, ys


def gate_candidates(
    traj: Trajectory,
    frame_dets: Sequence[Detection],
    cfg: Optional[TrackerConfig] = None,
) -> list[Detection]:
    """Detections that may continue the trajectory.

    A candidate lies between the limit curves (bounds included) and left
    of the last detected point, by ``step_range`` px per frame elapsed
    since that point. The segment from the last detected point to the
    candidate must also stay within ``angle_tolerance`` degrees of the
    curve heading there, or of the level heading before the trajectory
    has a curve.

    Examples
    --------
    >>> from trajmap.geometry import BBox
    >>> box = BBox.from_corners(Point(100, 900), Point(300, 1000))
    >>> pair = RipplePair(0, box, box)
    >>> seed = Detection.from_box(0, BBox(1800, 500, 9, 6))
    >>> (traj,) = seed_trajectories([seed], pair, TrackerConfig())
    >>> dets = [
    ...     Detection.from_box(1, BBox(x, 505, 9, 6))
    ...     for x in (1790, 1745, 1600)
    ... ]
    >>> [d.x for d in gate_candidates(traj, dets)]
    [1745]
    """
    cfg = cfg or TrackerConfig()
    if not frame_dets:
        return []
    xs, ys = _coordinates(frame_dets)
    mask = _gate_mask(traj, xs, ys, cfg)
    return [d for d, keep in zip(frame_dets, mask) if keep]


def associate(
    traj: Trajectory, candidates: Sequence[Detection]
) -> Optional[Detection]:
    """Candidate closest to the newest point of the trajectory.

    Ties go to the smaller y, then to the smaller x.
    """
    if not candidates:
        return None
    ref = traj.newest.point
    return min(
        candidates,
        key=lambda d: (d.centroid.squared_distance(ref), d.y, d.x),
    )


def accept_point(
    traj: Trajectory,
    det: Detection,
    frame_dets: Sequence[Detection],
    ripple: RipplePair,
    cfg: TrackerConfig,
) -> Trajectory:
    """Append a detection and update the curve and limit curves.

    The curve is refitted on the detected points while the trajectory
    grows and frozen once ``commit_count`` detections are accepted.
    """
    if not traj.is_live:
        raise InvariantViolation(f"Trajectory {traj.id} is terminated")
    points = _append(traj, TrackPoint(det.frame, det.centroid))
    accepted = [*traj.accepted, det.centroid]

    curve, state = traj.curve, traj.state
    committed_frame = traj.committed_frame
    if state is TrajectoryState.GROWING and len(accepted) >= 3:
        try:
            curve = fit_poly(accepted, degree=2)
        except SingularSystem:
            pass
        if len(accepted) >= cfg.commit_count and curve is not None:
            state = TrajectoryState.COMMITTED
            committed_frame = det.frame

    ripple = ripple.ordered()
    target = target_box(curve, det.x, ripple, cfg.frame_w)
    alpha, _ = box_corners(target)
    height = max_height_sample([*frame_dets, det], alpha, cfg.frame_w)
    heights = traj.max_height_samples + (height,)
    return replace(
        traj,
        points=points,
        curve=curve,
        limits=_limits(accepted, heights, target),
        max_height_samples=heights,
        state=state,
        committed_frame=committed_frame,
        misses=0,
    )


def extrapolate(traj: Trajectory) -> Point:
    """Next position from the last three points and the curve.

    ``x = 3 x[-1] - 3 x[-2] + x[-3]``, which is exact when x is a
    quadratic function of the frame index; y is read from the curve.

    Examples
    --------
    >>> pts = tuple(
    ...     TrackPoint(f, Point(x, x * x)) for f, x in enumerate((1, 2, 4))
    ... )
    >>> limits = LimitPair.build([Point(0, 0), Point(1, 0)], [Point(0, 1), Point(1, 1)])
    >>> traj = Trajectory(0, pts, limits, (), curve=Quadratic(0, 0, 1))
    >>> extrapolate(traj)
    Point(x=7, y=49)
    """
    if len(traj.points) < 3 or traj.curve is None:
        raise TooFewPoints(
            f"Extrapolation needs 3 points and a curve, trajectory "
            f"{traj.id} has {len(traj.points)} points"
        )
    x3, x2, x1 = (tp.point.x for tp in traj.points[-3:])
    x = 3 * x1 - 3 * x2 + x3
    return Point(x, traj.curve(x))


def coast(traj: Trajectory) -> Point:
    """Next position at the velocity between the last two detected points.

    Examples
    --------
    >>> pts = (
    ...     TrackPoint(0, Point(100, 10)),
    ...     TrackPoint(1, Point(100, 10), PointSource.EXTRAPOLATED),
    ...     TrackPoint(2, Point(80, 14)),
    ... )
    >>> limits = LimitPair.build([Point(0, 0), Point(1, 0)], [Point(0, 1), Point(1, 1)])
    >>> coast(Trajectory(0, pts, limits, ()))
    Point(x=70.0, y=16.0)
    """
    detected = [tp for tp in traj.points if tp.detected][-2:]
    if len(detected) < 2:
        raise TooFewPoints(f"Trajectory {traj.id} has a single detection")
    (f0, p0), (f1, p1) = ((tp.frame, tp.point) for tp in detected)
    ahead = (traj.newest.frame + 1 - f1) / (f1 - f0)
    return Point(p1.x + (p1.x - p0.x) * ahead, p1.y + (p1.y - p0.y) * ahead)


def terminate(traj: Trajectory, reason: EndReason) -> Trajectory:
    return replace(
        traj, state=TrajectoryState.TERMINATED, end_reason=reason
    )


def _miss(traj: Trajectory, cfg: TrackerConfig) -> Trajectory:
    misses = traj.misses + 1
    single = traj.n_accepted < 2
    if misses > (cfg.max_seed_misses if single else cfg.max_misses):
        return terminate(traj, EndReason.LOST)
    if single:
        p = traj.newest.point
    elif traj.curve is not None:
        p = extrapolate(traj)
    else:
        p = coast(traj)
    tp = TrackPoint(traj.newest.frame + 1, p, PointSource.EXTRAPOLATED)
    return replace(traj, points=_append(traj, tp), misses=misses)


def _check_end(
    traj: Trajectory, ripple: RipplePair, cfg: TrackerConfig
) -> Trajectory:
    p = traj.newest.point
    if ripple.contains(p):
        return terminate(traj, EndReason.ARRIVED)
    if not (0 <= p.x <= cfg.frame_w and 0 <= p.y <= cfg.frame_h):
        return terminate(traj, EndReason.EXITED)
    return traj


@dataclass(frozen=True)
class TrackerState:
    """Everything a tracker carries from one frame to the next."""

    frame: int = -1
    live: tuple[Trajectory, ...] = ()
    finished: tuple[Trajectory, ...] = ()
    ripple: Optional[RipplePair] = None
    next_id: int = 0

    @property
    def trajectories(self) -> list[Trajectory]:
        return sorted(self.finished + self.live, key=lambda t: t.id)


def _processing_order(traj: Trajectory) -> tuple[int, int, float, int]:
    # Trajectories detected in the previous frame claim first
    return (traj.misses, traj.seed.frame, -traj.seed.point.x, traj.id)


def _process_frame(
    state: TrackerState,
    frame: int,
    frame_dets: Sequence[Detection],
    ripple: Optional[RipplePair],
    cfg: TrackerConfig,
) -> TrackerState:
    for det in frame_dets:
        if det.frame != frame:
            raise ValueError(
                f"Detection of frame {det.frame} given for frame {frame}"
            )
    ripple = ripple.ordered() if ripple is not None else state.ripple
    if ripple is None:
        if state.live:
            raise MissingRipple(f"No ripple area seen up to frame {frame}")
        # Raises if anything would be seeded
        seed_trajectories(frame_dets, None, cfg)
        return replace(state, frame=frame)

    dets = list(frame_dets)
    xs, ys = _coordinates(dets)
    claimed = np.zeros(len(dets), dtype=bool)
    live: list[Trajectory] = []
    finished = list(state.finished)

    for traj in sorted(state.live, key=_processing_order):
        mask = _gate_mask(traj, xs, ys, cfg) & ~claimed
        index = np.flatnonzero(mask)
        chosen = associate(traj, [dets[i] for i in index])
        if chosen is None:
            traj = _miss(traj, cfg)
        else:
            i = next(i for i in index if dets[i] is chosen)
            if claimed[i]:
                raise InvariantViolation(
                    f"Detection {i} of frame {frame} claimed twice"
                )
            claimed[i] = True
            traj = accept_point(traj, chosen, dets, ripple, cfg)
        if traj.is_live:
            traj = _check_end(traj, ripple, cfg)
        (live if traj.is_live else finished).append(traj)

    unclaimed = [d for d, taken in zip(dets, claimed) if not taken]
    seeds = seed_trajectories(
        unclaimed, ripple, cfg, all_frame_dets=dets, first_id=state.next_id
    )
    return TrackerState(
        frame=frame,
        live=tuple(live + seeds),
        finished=tuple(finished),
        ripple=ripple,
        next_id=state.next_id + len(seeds),
    )


def step(
    state: TrackerState,
    frame: int,
    frame_dets: Sequence[Detection],
    ripple: Optional[RipplePair],
    cfg: TrackerConfig,
) -> TrackerState:
    """Advance the tracker to ``frame``.

    Frames skipped since the previous call are processed as empty frames.
    Without a ripple pair, the last one seen is reused.

    Examples
    --------
    >>> state = step(TrackerState(), 0, [], None, TrackerConfig())
    >>> step(state, 0, [], None, TrackerConfig())
    Traceback (most recent call last):
      ...
    trajmap.errors.OutOfOrderFrame: Frame 0 is not after frame 0
    """
    if frame <= state.frame:
        raise OutOfOrderFrame(
            f"Frame {frame} is not after frame {state.frame}"
        )
    for gap in range(state.frame + 1, frame):
        state = _process_frame(state, gap, (), None, cfg)
    return _process_frame(state, frame, frame_dets, ripple, cfg)


class Tracker:
    """Frame by frame trajectory mapping over a whole recording.

    Examples
    --------
    >>> tracker = Tracker(TrackerConfig(commit_count=3))
    >>> tracker.run({}, {}, n_frames=3)
    []
    >>> tracker.state.frame
    2
    """

    def __init__(self, cfg: Optional[TrackerConfig] = None):
        self.cfg = cfg or TrackerConfig()
        self.state = TrackerState()

    def step(
        self,
        frame: int,
        frame_dets: Sequence[Detection],
        ripple: Optional[RipplePair] = None,
    ) -> TrackerState:
        self.state = step(self.state, frame, frame_dets, ripple, self.cfg)
        return self.state

    def run(
        self,
        detections: Mapping[int, Sequence[Detection]],
        ripples: Mapping[int, RipplePair],
        n_frames: Optional[int] = None,
    ) -> list[Trajectory]:
        """Process every frame up to ``n_frames`` (by default the last
        frame holding data) and return the committed trajectories."""
        if n_frames is None:
            n_frames = max([*detections, *ripples], default=-1) + 1
        for frame in range(self.state.frame + 1, n_frames):
            self.step(frame, detections.get(frame, ()), ripples.get(frame))
        return self.results()

    @property
    def trajectories(self) -> list[Trajectory]:
        """All trajectories, tentative ones included."""
        return self.state.trajectories

    def results(self) -> list[Trajectory]:
        """Trajectories that reached the commit count, by id."""
        return [t for t in self.trajectories if t.is_committed]


def track(
    detections: Mapping[int, Sequence[Detection]],
    ripples: Mapping[int, RipplePair],
    cfg: Optional[TrackerConfig] = None,
    n_frames: Optional[int] = None,
) -> list[Trajectory]:
    """Committed trajectories of a whole recording."""
    return Tracker(cfg).run(detections, ripples, n_frames=n_frames)


def claimed_detections(
    trajectories: Iterable[Trajectory],
) -> dict[int, list[Point]]:
    """Detected points of every frame, across trajectories."""
    claimed: dict[int, list[Point]] = {}
    for traj in trajectories:
        for tp in traj.points:
            if tp.detected:
                claimed.setdefault(tp.frame, []).append(tp.point)
    return claimed
