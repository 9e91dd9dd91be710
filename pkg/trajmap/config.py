"""Validated configuration for every pipeline stage.

Each stage owns a pydantic dataclass; :class:`RunConfig` bundles them for
the command line, where values come from a YAML file and are then
overridden by flags.

Examples
--------
>>> TrackerConfig().commit_count
6
>>> TrackerConfig(commit_count=2)  # doctest: +IGNORE_EXCEPTION_DETAIL
Traceback (most recent call last):
  ...
pydantic_core._pydantic_core.ValidationError: 1 validation error for TrackerConfig
"""
from __future__ import annotations
from dataclasses import asdict, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import Field, ValidationError, model_validator
from pydantic.dataclasses import dataclass
import yaml

from trajmap.errors import InvalidConfig


@dataclass(frozen=True)
class StabilizationConfig:
    """Smoothing of the camera path.

    Parameters
    ----------
    smoothing_radius
        Number of frames on each side of the smoothing window.
    literal_gamma
        Normalise window sums by the radius instead of the number of
        samples in the window. Kept for comparison only: it doubles the
        smoothed path.
    """

    smoothing_radius: int = Field(30, ge=1)
    literal_gamma: bool = False


@dataclass(frozen=True)
class TrackerConfig:
    """Parameters of the trajectory-mapping tracker.

    Parameters
    ----------
    cut_fraction
        Trajectories are seeded from detections with
        ``x >= frame_w * cut_fraction``.
    commit_count
        Number of accepted detections after which the trajectory curve
        is frozen (n_f).
    angle_tolerance
        Maximum deviation, in degrees, between a candidate step and the
        curve heading.
    max_misses
        Consecutive extrapolated points tolerated before a trajectory is
        declared lost.
    max_seed_misses
        Same for a trajectory holding a single detection, whose position
        is held in place while it waits.
    step_range
        Horizontal distance, in px per elapsed frame, a candidate may lie
        from the last detected point.
    """

    cut_fraction: float = Field(0.9, gt=0, lt=1)
    commit_count: int = Field(6, ge=3)
    angle_tolerance: float = Field(30.0, gt=0, le=90)
    max_misses: int = Field(3, ge=0)
    max_seed_misses: int = Field(1, ge=0)
    step_range: tuple[float, float] = (35.0, 80.0)
    frame_w: float = Field(1920.0, gt=0)
    frame_h: float = Field(1080.0, gt=0)

    @model_validator(mode="after")
    def _check_steps(self):
        lo, hi = self.step_range
        if not 0 <= lo < hi:
            raise ValueError("step_range must be an increasing range from 0")
        return self


@dataclass(frozen=True)
class BoxConfig:
    cx: float
    cy: float
    w: float = Field(gt=0)
    h: float = Field(gt=0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic scenario parameters.

    Defaults follow the reference recording: 419 frames of 1920×1080 at
    30 fps and pellets between 9×6 and 13×36 px. Pellets land inside one of
    the two ripple areas; the flight duration follows from the launch speed
    and averages about 24 frames with the default boxes. The speed range
    is narrow enough for pellets to keep their launch order.
    """

    frame_w: float = Field(1920.0, gt=0)
    frame_h: float = Field(1080.0, gt=0)
    fps: float = Field(30.0, gt=0)
    n_frames: int = Field(419, ge=1)
    pellet_rate: float = Field(0.072, ge=0)
    n_pellets: Optional[int] = Field(None, ge=0)
    launch_band: tuple[float, float] = (0.9, 1.0)
    launch_vy: tuple[float, float] = (0.0, 2.0)
    launch_speed: tuple[float, float] = (50.0, 62.0)
    gravity: float = Field(1.2, gt=0)
    noise_sigma: float = Field(0.0, ge=0)
    dropout_prob: float = Field(0.0, ge=0, le=1)
    clutter_rate: float = Field(0.0, ge=0)
    pellet_size_min: tuple[float, float] = (9.0, 6.0)
    pellet_size_max: tuple[float, float] = (13.0, 36.0)
    ripple_left: BoxConfig = field(
        default_factory=lambda: BoxConfig(cx=300, cy=950, w=360, h=120)
    )
    ripple_right: BoxConfig = field(
        default_factory=lambda: BoxConfig(cx=700, cy=950, w=360, h=120)
    )
    shake_amplitude: float = Field(0.0, ge=0)
    shake_period: float = Field(24.0, gt=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self):
        for name in ("launch_band", "launch_vy", "launch_speed"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be an increasing range")
        lo, hi = self.launch_band
        if not 0 <= lo <= hi <= 1:
            raise ValueError("launch_band must lie within [0, 1]")
        if self.launch_speed[0] <= 0:
            raise ValueError("launch_speed must be positive")
        if self.launch_vy[0] < 0:
            raise ValueError("pellets are launched level or downward")
        for lo, hi in zip(self.pellet_size_min, self.pellet_size_max):
            if not 0 < lo <= hi:
                raise ValueError("pellet sizes must be positive ranges")
        return self

    @property
    def pellet_count(self) -> int:
        if self.n_pellets is not None:
            return self.n_pellets
        return round(self.pellet_rate * self.n_frames)


@dataclass(frozen=True)
class EvalConfig:
    match_threshold: float = Field(50.0, gt=0)
    nf_range: tuple[int, int] = (3, 9)

    @model_validator(mode="after")
    def _check_range(self):
        lo, hi = self.nf_range
        if not 3 <= lo <= hi:
            raise ValueError("nf_range must be an increasing range from 3")
        return self


@dataclass(frozen=True)
class PathsConfig:
    detections: Optional[Path] = None
    ripples: Optional[Path] = None
    transforms: Optional[Path] = None
    ground_truth: Optional[Path] = None
    trajectories: Optional[Path] = None
    output: Optional[Path] = None


@dataclass(frozen=True)
class RunConfig:
    """Configuration of a whole command line run.

    Examples
    --------
    >>> cfg = RunConfig.from_dict({"tracker": {"commit_count": 4}})
    >>> cfg.tracker.commit_count, cfg.stabilization.smoothing_radius
    (4, 30)
    >>> cfg.override("scenario", seed=7).scenario.seed
    7
    """

    stabilization: StabilizationConfig = field(
        default_factory=StabilizationConfig
    )
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RunConfig:
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown config sections: {sorted(unknown)}")
        try:
            return cls(**data)
        except ValidationError as err:
            raise InvalidConfig(str(err)) from err

    @classmethod
    def from_file(cls, path: Path) -> RunConfig:
        """Load a YAML (or JSON) config file."""
        with open(path) as handle:
            data = yaml.safe_load(handle) or {}
        if not isinstance(data, dict):
            raise InvalidConfig(f"{path} must contain a mapping")
        return cls.from_dict(data)

    def override(self, section: str, **values: Any) -> RunConfig:
        """Copy with some fields of a section replaced.

        ``None`` values are ignored so that unset CLI flags keep the
        configured value.
        """
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        current = getattr(self, section)
        try:
            updated = type(current)(**(asdict(current) | values))
        except ValidationError as err:
            raise InvalidConfig(str(err)) from err
        return replace(self, **{section: updated})
