import numpy as np
import pytest

from trajmap.config import ScenarioConfig, StabilizationConfig
from trajmap.errors import InvalidConfig
from trajmap.simulator import (
    NOISE_TRUNCATION,
    _truncated_noise,
    generate,
    launch_frames,
    max_flight_frames,
)
from trajmap.stabilizer import stabilize


def test_default_recording():
    cfg = ScenarioConfig()
    assert cfg.n_frames == 419
    assert cfg.pellet_count == 30
    scenario = generate(cfg)
    assert sorted(scenario.ripples) == list(range(419))
    assert len(scenario.ground_truth) == 30


def test_same_seed_same_scenario():
    cfg = ScenarioConfig(
        n_pellets=5, n_frames=200, noise_sigma=2, dropout_prob=0.1, seed=7
    )
    first, second = generate(cfg), generate(cfg)
    assert first.detections == second.detections
    assert first.ground_truth == second.ground_truth
    other = generate(ScenarioConfig(n_pellets=5, n_frames=200, seed=8))
    assert other.ground_truth != first.ground_truth


def test_flights_are_ballistic(noiseless_scenario):
    g = noiseless_scenario.config.gravity
    for track in noiseless_scenario.ground_truth:
        xs = np.array([p.x for p in track.points])
        ys = np.array([p.y for p in track.points])
        speeds = -np.diff(xs)
        assert np.allclose(speeds, speeds[0], atol=1e-9)
        assert 50 <= speeds[0] <= 62
        assert np.allclose(np.diff(ys, 2), g, atol=1e-9)


def test_flights_end_on_landing(noiseless_scenario):
    for track in noiseless_scenario.ground_truth:
        ripple = noiseless_scenario.ripples[track.landing_frame]
        assert ripple.contains(track.landing_point)
        assert not any(ripple.contains(p) for p in track.points[:-1])
        assert track.landing_frame < noiseless_scenario.n_frames


def test_noiseless_detections_are_exact(noiseless_scenario):
    for track in noiseless_scenario.ground_truth:
        for frame, p in track.positions().items():
            dets = noiseless_scenario.detections[frame]
            assert min(d.centroid.distance(p) for d in dets) == 0


def test_pellets_keep_launch_order(noiseless_scenario):
    tracks = noiseless_scenario.ground_truth
    for earlier, later in zip(tracks, tracks[1:]):
        for frame in set(earlier.frames) & set(later.frames):
            assert (
                earlier.positions()[frame].x < later.positions()[frame].x
            )


def test_dropout_rate():
    cfg = ScenarioConfig(
        n_pellets=400, n_frames=6000, dropout_prob=0.3, seed=11
    )
    scenario = generate(cfg)
    expected = sum(len(t.points) for t in scenario.ground_truth)
    observed = sum(len(d) for d in scenario.detections.values())
    assert 1 - observed / expected == pytest.approx(0.3, abs=0.02)


def test_noise_is_truncated():
    rng = np.random.default_rng(0)
    noise = _truncated_noise(rng, 10_000, 2.0)
    assert np.hypot(*noise.T).max() <= NOISE_TRUNCATION * 2.0
    assert noise.std() == pytest.approx(2.0, rel=0.1)
    assert not _truncated_noise(rng, 5, 0.0).any()


def test_clutter():
    scenario = generate(
        ScenarioConfig(n_pellets=0, n_frames=500, clutter_rate=5, seed=2)
    )
    assert scenario.ground_truth == []
    assert scenario.clutter_count == sum(
        len(d) for d in scenario.detections.values()
    )
    assert scenario.clutter_count / 500 == pytest.approx(5, rel=0.1)


def test_launch_frames_leave_room_to_land():
    cfg = ScenarioConfig()
    frames = launch_frames(cfg)
    assert frames[0] == 0
    assert frames[-1] + max_flight_frames(cfg) < cfg.n_frames
    assert min(np.diff(frames)) >= 13
    with pytest.raises(InvalidConfig):
        launch_frames(ScenarioConfig(n_frames=20))


def test_invalid_ranges():
    with pytest.raises(ValueError):
        ScenarioConfig(launch_speed=(60, 50))
    with pytest.raises(ValueError):
        ScenarioConfig(n_frames=0)
    with pytest.raises(ValueError):
        ScenarioConfig(dropout_prob=1.5)


def test_shake_is_cancelled_by_stabilization():
    stabilization = StabilizationConfig(smoothing_radius=30)
    base = dict(n_pellets=6, n_frames=200, noise_sigma=1.0, seed=5)
    clean = generate(ScenarioConfig(**base))
    shaken = generate(
        ScenarioConfig(**base, shake_amplitude=15.0), stabilization
    )
    assert clean.transforms is None
    assert len(shaken.transforms) == 200
    assert shaken.detections != clean.detections
    restored = stabilize(shaken.detections, shaken.transforms, stabilization)
    for frame, dets in clean.detections.items():
        for got, want in zip(restored[frame], dets):
            assert got.centroid.distance(want.centroid) < 1e-6
