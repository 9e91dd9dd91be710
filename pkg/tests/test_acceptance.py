"""End-to-end runs on full-length noisy recordings"""

import time

import pytest

from trajmap.config import RunConfig, ScenarioConfig
from trajmap.evaluator import sweep_nf
from trajmap.simulator import generate
from trajmap.tracker import Tracker

NOISY = ScenarioConfig(
    n_pellets=30,
    noise_sigma=2.0,
    dropout_prob=0.1,
    clutter_rate=5.0,
    seed=42,
)


@pytest.mark.slow
def test_noisy_recording_is_recovered():
    report = sweep_nf(generate(NOISY), RunConfig(scenario=NOISY))
    best = report.row(report.best_nf)
    assert best.detected_fraction >= 0.9
    assert best.mean <= 3 * NOISY.noise_sigma
    assert report.row(3).mean > best.mean


@pytest.mark.slow
def test_tracker_throughput():
    scenario = generate(
        ScenarioConfig(n_pellets=30, noise_sigma=2.0, clutter_rate=48.0)
    )
    per_frame = scenario.clutter_count / scenario.n_frames
    assert per_frame > 40
    tracker = Tracker(RunConfig().tracker)
    start = time.perf_counter()
    tracker.run(scenario.detections, scenario.ripples, scenario.n_frames)
    elapsed = time.perf_counter() - start
    assert scenario.n_frames / elapsed >= 300
