"""Synthetic pellet scenarios with known ground truth.

Every pellet follows an exact ballistic law in image coordinates::

    x_t = x0 - speed * t
    y_t = y0 + vy * t + gravity * t**2 / 2

from its launch frame until the first frame where it lies inside a ripple
area. Observations are the true positions with optional truncated Gaussian
noise, random dropout and uniformly distributed clutter.

Random numbers come from numpy's ``PCG64`` bit generator seeded with
``ScenarioConfig.seed``: a permuted congruential generator with a 128-bit
linear congruential state, so a seed identifies a scenario exactly.

Examples
--------
>>> scenario = generate(ScenarioConfig(n_pellets=2, n_frames=80))
>>> len(scenario.ground_truth)
2
>>> all(scenario.ripples[t.landing_frame].contains(t.landing_point)
...     for t in scenario.ground_truth)
True
"""
from __future__ import annotations
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from trajmap.config import BoxConfig, ScenarioConfig, StabilizationConfig
from trajmap.errors import InvalidConfig
from trajmap.geometry import BBox, Detection, Point, RipplePair
from trajmap.stabilizer import (
    TransformSample,
    shake_offsets,
    shake_path,
    uncorrect_point,
)

# Landing points are drawn this far inside the ripple boxes (as a
# fraction of the box size, from the center).
LANDING_SPREAD_X = 0.3
LANDING_SPREAD_Y = 0.25
NOISE_TRUNCATION = 3.0
TRANSFORM_DECIMALS = 6


@dataclass(frozen=True)
class GroundTruthTrack:
    """True flight of one pellet, one point per frame from launch to
    landing."""

    id: int
    launch_frame: int
    points: tuple[Point, ...]

    @property
    def landing_frame(self) -> int:
        return self.launch_frame + len(self.points) - 1

    @property
    def landing_point(self) -> Point:
        return self.points[-1]

    @property
    def frames(self) -> range:
        return range(self.launch_frame, self.landing_frame + 1)

    def positions(self) -> dict[int, Point]:
        return dict(zip(self.frames, self.points))


@dataclass
class Scenario:
    """Output of :func:`generate`.

    ``detections`` and ``ripples`` are keyed by frame; every frame of the
    recording has a ripple pair. ``transforms`` holds the per-frame camera
    motion when shake is simulated.
    """

    config: ScenarioConfig
    detections: dict[int, list[Detection]]
    ripples: dict[int, RipplePair]
    ground_truth: list[GroundTruthTrack]
    transforms: Optional[list[TransformSample]] = None
    clutter_count: int = 0

    @property
    def n_frames(self) -> int:
        return self.config.n_frames


def _box(cfg: BoxConfig) -> BBox:
    return BBox(cfg.cx, cfg.cy, cfg.w, cfg.h)


def max_flight_frames(cfg: ScenarioConfig) -> float:
    """Longest flight the configuration can produce."""
    boxes = (_box(cfg.ripple_left), _box(cfg.ripple_right))
    lx_min = min(b.cx - LANDING_SPREAD_X * b.w for b in boxes)
    return (cfg.frame_w * cfg.launch_band[1] - lx_min) / cfg.launch_speed[0]


def launch_frames(cfg: ScenarioConfig) -> list[int]:
    """Launch frames, evenly spread so every flight ends in the recording.

    Example
    -------
    >>> launch_frames(ScenarioConfig(n_pellets=3, n_frames=100))
    [0, 32, 64]
    """
    n = cfg.pellet_count
    if n == 0:
        return []
    last = cfg.n_frames - math.ceil(max_flight_frames(cfg)) - 1
    if last < 0:
        raise InvalidConfig(
            f"{cfg.n_frames} frames cannot hold a flight of up to "
            f"{max_flight_frames(cfg):.1f} frames"
        )
    return [int(f) for f in np.round(np.linspace(0, last, n))]


def _flight(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    boxes: tuple[BBox, BBox],
    pellet: int,
) -> list[Point]:
    box = boxes[int(rng.integers(2))]
    lx = rng.uniform(
        box.cx - LANDING_SPREAD_X * box.w, box.cx + LANDING_SPREAD_X * box.w
    )
    ly = rng.uniform(
        box.cy - LANDING_SPREAD_Y * box.h, box.cy + LANDING_SPREAD_Y * box.h
    )
    x0 = rng.uniform(*(cfg.frame_w * b for b in cfg.launch_band))
    speed = rng.uniform(*cfg.launch_speed)
    vy = rng.uniform(*cfg.launch_vy)

    duration = (x0 - lx) / speed
    if duration <= 0:
        raise InvalidConfig("Ripple areas must lie left of the launch band")
    g = cfg.gravity
    y0 = ly - vy * duration - g * duration**2 / 2
    if y0 < 0:
        vy = 0.0
        y0 = ly - g * duration**2 / 2
    if y0 < 0:
        raise InvalidConfig(
            f"Pellet {pellet} would start above the frame; "
            "reduce gravity or increase launch_speed"
        )

    points = []
    t = 0
    while True:
        p = Point(x0 - speed * t, y0 + vy * t + g * t * t / 2)
        points.append(p)
        if any(b.contains(p) for b in boxes):
            return points
        if p.x < 0 or p.y > cfg.frame_h:
            raise InvalidConfig(
                f"Pellet {pellet} never lands in a ripple area; "
                "reduce gravity or launch_speed"
            )
        t += 1


def _truncated_noise(
    rng: np.random.Generator, n: int, sigma: float
) -> np.ndarray:
    noise = np.zeros((n, 2))
    if sigma == 0:
        return noise
    pending = np.arange(n)
    while len(pending):
        noise[pending] = rng.normal(0.0, sigma, size=(len(pending), 2))
        radius = np.hypot(noise[pending, 0], noise[pending, 1])
        pending = pending[radius > NOISE_TRUNCATION * sigma]
    return noise


def _pellet_size(
    rng: np.random.Generator, cfg: ScenarioConfig
) -> tuple[float, float]:
    return tuple(
        rng.uniform(lo, hi)
        for lo, hi in zip(cfg.pellet_size_min, cfg.pellet_size_max)
    )


def generate(
    cfg: ScenarioConfig,
    stabilization: Optional[StabilizationConfig] = None,
) -> Scenario:
    """Simulate a recording.

    Parameters
    ----------
    cfg
        Scenario parameters, including the seed.
    stabilization
        Stabilisation settings the shaken detections will be corrected
        with. Camera shake is injected by applying the inverse of that
        correction to the shake-free detections, using the rounded
        transforms the scenario carries. Stabilising with the same
        settings therefore restores the shake-free coordinates by
        construction, up to floating point error, and a stabilised run
        tracks like the shake-free run of the same seed.

    Returns
    -------
    Scenario
        Per-frame detections and ripple pairs, ground truth tracks and,
        with shake, the per-frame camera transforms.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    boxes = (_box(cfg.ripple_left), _box(cfg.ripple_right))
    ripple = RipplePair(0, *boxes).ordered()
    if not ripple.within(cfg.frame_w, cfg.frame_h):
        raise InvalidConfig("Ripple areas must lie inside the frame")

    detections: dict[int, list[Detection]] = {
        f: [] for f in range(cfg.n_frames)
    }
    ground_truth = []
    for pellet, start in enumerate(launch_frames(cfg)):
        points = _flight(cfg, rng, boxes, pellet)
        track = GroundTruthTrack(pellet, start, tuple(points))
        ground_truth.append(track)

        size = _pellet_size(rng, cfg)
        noise = _truncated_noise(rng, len(points), cfg.noise_sigma)
        kept = rng.random(len(points)) >= cfg.dropout_prob
        for (frame, p), offset, keep in zip(
            track.positions().items(), noise, kept
        ):
            if not keep:
                continue
            x = float(np.clip(p.x + offset[0], 0, cfg.frame_w))
            y = float(np.clip(p.y + offset[1], 0, cfg.frame_h))
            detections[frame].append(
                Detection.from_box(frame, BBox(x, y, *size))
            )

    clutter_count = 0
    for frame in range(cfg.n_frames):
        for _ in range(int(rng.poisson(cfg.clutter_rate))):
            x = rng.uniform(0, cfg.frame_w)
            y = rng.uniform(0, cfg.frame_h)
            size = _pellet_size(rng, cfg)
            detections[frame].append(
                Detection.from_box(frame, BBox(x, y, *size))
            )
            clutter_count += 1

    transforms = None
    if cfg.shake_amplitude > 0:
        transforms = [
            TransformSample(
                *(round(v, TRANSFORM_DECIMALS) for v in s.as_tuple())
            )
            for s in shake_path(
                cfg.n_frames, cfg.shake_amplitude, cfg.shake_period
            )
        ]
        offsets = shake_offsets(
            transforms, stabilization or StabilizationConfig()
        )
        center = Point(cfg.frame_w / 2, cfg.frame_h / 2)
        detections = {
            frame: [
                d.moved_to(uncorrect_point(d.centroid, offsets[frame], center))
                for d in dets
            ]
            for frame, dets in detections.items()
        }

    ripples = {
        f: RipplePair(f, ripple.left, ripple.right)
        for f in range(cfg.n_frames)
    }
    return Scenario(
        config=cfg,
        detections=detections,
        ripples=ripples,
        ground_truth=ground_truth,
        transforms=transforms,
        clutter_count=clutter_count,
    )
