"""Tests for the trajmap command line interface"""

from pathlib import Path

import pytest
from typer.testing import CliRunner

from trajmap import __version__
from trajmap.cli import cli
from trajmap.io import (
    read_detections,
    read_ground_truth,
    read_report,
    read_ripples,
    read_trajectories,
)

runner = CliRunner()

RAW_FIXTURE = Path(__file__).parents[1] / "data" / "raw_predictions.csv"


def simulate(out_dir, *args):
    result = runner.invoke(cli, ["simulate", "-o", str(out_dir), *args])
    assert result.exit_code == 0, result.output
    return out_dir


def track(out_dir, *args):
    output = out_dir / "trajectories.csv"
    result = runner.invoke(
        cli,
        [
            "track",
            "--detections",
            str(out_dir / "detections.csv"),
            "--ripples",
            str(out_dir / "ripples.csv"),
            "-o",
            str(output),
            *args,
        ],
    )
    assert result.exit_code == 0, result.output
    return output


## Global options


def test_version():
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert f"trajmap {__version__}" in result.stdout


def test_config_from_env(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("scenario:\n  n_frames: 100\n  n_pellets: 2\n")
    result = runner.invoke(
        cli,
        ["simulate", "-o", str(tmp_path)],
        env={"TRAJMAP_CONFIG": str(config)},
    )
    assert result.exit_code == 0, result.output
    assert sorted(read_ripples(tmp_path / "ripples.csv")) == list(range(100))
    assert len(read_ground_truth(tmp_path / "ground_truth.csv")) == 2


def test_invalid_config_file(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("tracker:\n  commit_count: 1\n")
    result = runner.invoke(cli, ["-c", str(config), "simulate"])
    assert result.exit_code == 1
    assert "ERROR:" in result.output


## Simulate


def test_simulate_default(tmp_path):
    simulate(tmp_path)
    assert sorted(read_ripples(tmp_path / "ripples.csv")) == list(range(419))
    assert len(read_ground_truth(tmp_path / "ground_truth.csv")) == 30
    assert not (tmp_path / "transforms.csv").exists()


def test_simulate_is_reproducible(tmp_path):
    args = ["--seed", "7", "--noise-sigma", "2", "--dropout-prob", "0.1"]
    first = simulate(tmp_path / "a", *args)
    second = simulate(tmp_path / "b", *args)
    for name in ("detections.csv", "ripples.csv", "ground_truth.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_track_and_eval_are_reproducible(tmp_path):
    args = [
        "--seed",
        "11",
        "--n-pellets",
        "4",
        "--n-frames",
        "160",
        "--noise-sigma",
        "2",
        "--dropout-prob",
        "0.1",
        "--clutter-rate",
        "5",
    ]
    outputs = []
    for name in ("a", "b"):
        out_dir = simulate(tmp_path / name, *args)
        trajectories = track(out_dir)
        report = out_dir / "report.csv"
        result = runner.invoke(
            cli,
            [
                "eval",
                "--trajectories",
                str(trajectories),
                "--ground-truth",
                str(out_dir / "ground_truth.csv"),
                "--ripples",
                str(out_dir / "ripples.csv"),
                "-o",
                str(report),
            ],
        )
        assert result.exit_code == 0, result.output
        outputs.append((trajectories.read_bytes(), report.read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "args",
    [["--n-frames", "0"], ["--dropout-prob", "1.5"], ["--noise-sigma=-1"]],
)
def test_simulate_rejects_invalid_values(tmp_path, args):
    result = runner.invoke(cli, ["simulate", "-o", str(tmp_path), *args])
    assert result.exit_code == 1
    assert not (tmp_path / "detections.csv").exists()


## Track


def test_track_noiseless_recording(tmp_path):
    simulate(tmp_path, "--seed", "1")
    records = read_trajectories(track(tmp_path))
    gts = read_ground_truth(tmp_path / "ground_truth.csv")
    assert len(records) == len(gts) == 30
    assert {r.status for r in records} == {"arrived"}


def test_track_missing_input(tmp_path):
    output = tmp_path / "trajectories.csv"
    result = runner.invoke(
        cli,
        [
            "track",
            "--detections",
            str(tmp_path / "missing.csv"),
            "-o",
            str(output),
        ],
    )
    assert result.exit_code == 2
    assert "ERROR:" in result.output
    assert not output.exists()


def test_track_malformed_input(tmp_path):
    detections = tmp_path / "detections.csv"
    detections.write_text("frame,cx,cy,w,h,class\n0,1,2,3,4,nutriment\n")
    result = runner.invoke(
        cli, ["track", "--detections", str(detections), "-o", "out.csv"]
    )
    assert result.exit_code == 2
    assert f"{detections}:1:" in result.output


def test_track_needs_output(tmp_path):
    simulate(tmp_path, "--n-pellets", "2", "--n-frames", "100")
    result = runner.invoke(
        cli, ["track", "--detections", str(tmp_path / "detections.csv")]
    )
    assert result.exit_code == 1


def test_stabilised_tracking_matches_still_camera(tmp_path):
    args = ["--seed", "5", "--n-pellets", "6", "--n-frames", "200"]
    still = simulate(tmp_path / "still", *args)
    shaken = simulate(tmp_path / "shaken", *args, "--shake-amplitude", "15")
    assert (shaken / "transforms.csv").exists()

    expected = read_trajectories(track(still))
    found = read_trajectories(
        track(shaken, "--transforms", str(shaken / "transforms.csv"))
    )
    assert len(found) == len(expected) == 6
    for a, b in zip(found, expected):
        assert a.positions().keys() == b.positions().keys()
        for frame, p in a.positions().items():
            assert p.distance(b.positions()[frame]) < 1e-3


## Eval and sweep


def test_eval_perfect_tracking(tmp_path):
    simulate(tmp_path, "--seed", "1")
    trajectories = track(tmp_path)
    report = tmp_path / "report.csv"
    result = runner.invoke(
        cli,
        [
            "eval",
            "--trajectories",
            str(trajectories),
            "--ground-truth",
            str(tmp_path / "ground_truth.csv"),
            "--ripples",
            str(tmp_path / "ripples.csv"),
            "-o",
            str(report),
        ],
    )
    assert result.exit_code == 0, result.output
    (row,) = read_report(report).rows
    assert row.n == 30
    assert row.mean < 1e-3
    assert row.detected_fraction == 1.0
    assert row.precision_trajectory == 1.0


def test_eval_sweep(tmp_path):
    simulate(tmp_path, "--seed", "3", "--n-pellets", "4", "--n-frames", "160")
    report = tmp_path / "report.csv"
    result = runner.invoke(
        cli,
        [
            "eval",
            "--sweep",
            "--detections",
            str(tmp_path / "detections.csv"),
            "--ripples",
            str(tmp_path / "ripples.csv"),
            "--ground-truth",
            str(tmp_path / "ground_truth.csv"),
            "-o",
            str(report),
        ],
    )
    assert result.exit_code == 0, result.output
    assert [r.nf for r in read_report(report).rows] == list(range(3, 10))
    assert "best n_f: 3" in result.stdout


def test_eval_needs_ground_truth(tmp_path):
    result = runner.invoke(cli, ["eval", "--trajectories", "t.csv"])
    assert result.exit_code == 1


def test_sweep_command(tmp_path):
    report = tmp_path / "report.csv"
    result = runner.invoke(
        cli,
        [
            "sweep",
            "--seed",
            "3",
            "--n-pellets",
            "4",
            "--n-frames",
            "160",
            "-o",
            str(report),
        ],
    )
    assert result.exit_code == 0, result.output
    assert len(read_report(report).rows) == 7


## Decode


def test_decode_fixture(tmp_path):
    result = runner.invoke(
        cli,
        [
            "decode",
            str(RAW_FIXTURE),
            "--ref-w",
            "11",
            "--ref-h",
            "20",
            "-o",
            str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    detections = read_detections(tmp_path / "detections.csv")
    assert sorted(detections) == [0, 1]
    (first,) = detections[0]
    assert (first.x, first.y) == (1800.5, 120.5)
    (second,) = detections[1]
    assert second.box.w == pytest.approx(22.0, abs=1e-4)
    ripples = read_ripples(tmp_path / "ripples.csv")
    assert (ripples[0].left.cx, ripples[0].right.cx) == (300.5, 700.5)
    assert ripples[1].left == ripples[1].right


def test_decode_needs_positive_reference(tmp_path):
    result = runner.invoke(
        cli,
        ["decode", str(RAW_FIXTURE), "--ref-w", "0", "--ref-h", "20"],
    )
    assert result.exit_code == 1
