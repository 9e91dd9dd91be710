"""Command line interface to simulate, track and evaluate pellet flights."""

# Use typer for CLI

from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace
from typing import Mapping, Optional, Sequence
from typing_extensions import Annotated

import typer

from trajmap import __version__
from trajmap.config import RunConfig
from trajmap.detector import DEFAULT_MIN_CONFIDENCE, decode_frames
from trajmap.errors import exit_code_for
from trajmap.evaluator import (
    EvalReport,
    NfRow,
    evaluate,
    orphans,
    sweep_nf,
)
from trajmap.formats import FileKind
from trajmap.geometry import Detection, RipplePair
from trajmap.io import (
    detections_frame,
    ground_truth_frame,
    read_detections,
    read_ground_truth,
    read_raw_predictions,
    read_ripples,
    read_trajectories,
    read_transforms,
    render_table,
    ripples_frame,
    trajectories_frame,
    transforms_frame,
    write_text,
)
from trajmap.report import render_records, render_svg, render_text
from trajmap.simulator import Scenario, generate
from trajmap.stabilizer import TransformSample, stabilize
from trajmap.tracker import Tracker

cli = typer.Typer(add_completion=False)

DETECTIONS_FILE = "detections.csv"
RIPPLES_FILE = "ripples.csv"
TRANSFORMS_FILE = "transforms.csv"
GROUND_TRUTH_FILE = "ground_truth.csv"

OUTPUT_DIR_OPT = Annotated[
    Optional[Path],
    typer.Option(
        "--output",
        "-o",
        help="Directory receiving the generated files. Defaults to paths.output or the working directory.",
    ),
]
SEED_OPT = Annotated[
    Optional[int], typer.Option(help="Seed of the scenario generator.")
]
N_FRAMES_OPT = Annotated[
    Optional[int], typer.Option(help="Number of frames to simulate.")
]
N_PELLETS_OPT = Annotated[
    Optional[int],
    typer.Option(help="Number of pellets; derived from the rate if unset."),
]
NOISE_OPT = Annotated[
    Optional[float],
    typer.Option(help="Std. deviation of the centroid noise, in pixels."),
]
DROPOUT_OPT = Annotated[
    Optional[float],
    typer.Option(help="Probability that a detection is missed."),
]
CLUTTER_OPT = Annotated[
    Optional[float],
    typer.Option(help="Mean number of spurious detections per frame."),
]
SHAKE_AMPLITUDE_OPT = Annotated[
    Optional[float],
    typer.Option(help="Amplitude of the camera shake, in pixels."),
]
SHAKE_PERIOD_OPT = Annotated[
    Optional[float],
    typer.Option(help="Period of the camera shake, in frames."),
]
SMOOTHING_OPT = Annotated[
    Optional[int],
    typer.Option(help="Half width of the camera path smoothing window."),
]
COMMIT_COUNT_OPT = Annotated[
    Optional[int],
    typer.Option(help="Accepted detections before a trajectory commits."),
]
CUT_FRACTION_OPT = Annotated[
    Optional[float],
    typer.Option(help="Trajectories are seeded right of w * cut-fraction."),
]
ANGLE_OPT = Annotated[
    Optional[float],
    typer.Option(help="Tolerated deviation from the curve heading (deg)."),
]
MAX_MISSES_OPT = Annotated[
    Optional[int],
    typer.Option(help="Extrapolated frames tolerated before a loss."),
]
THRESHOLD_OPT = Annotated[
    Optional[float],
    typer.Option(help="Largest mean distance of a matched pair (px)."),
]
SVG_OPT = Annotated[
    Optional[Path],
    typer.Option(help="Also plot the report to this SVG file."),
]
REPORT_OPT = Annotated[
    Optional[Path],
    typer.Option("--output", "-o", help="Write report records here."),
]


@contextmanager
def reported_errors():
    """Turn exceptions into an ERROR line and the matching exit code."""
    try:
        yield
    except (typer.Exit, typer.Abort):
        raise
    except Exception as err:
        typer.echo(f"ERROR: {err}", err=True)
        raise typer.Exit(exit_code_for(err))


def _config(ctx: typer.Context) -> RunConfig:
    return ctx.obj.config if ctx.obj else RunConfig()


def _required(value: Optional[Path], configured: Optional[Path], name: str):
    path = value or configured
    if path is None:
        raise ValueError(f"--{name} is required (or set paths.{name})")
    return path


def _frame_count(
    detections: Mapping[int, Sequence[Detection]],
    ripples: Mapping[int, RipplePair],
    transforms: Optional[Sequence[TransformSample]] = None,
) -> int:
    if transforms is not None:
        return len(transforms)
    return max([*detections, *ripples], default=-1) + 1


def _write_all(outputs: Mapping[Path, str]):
    """Write rendered outputs, once all of them are ready."""
    for path, text in outputs.items():
        write_text(path, text)
        typer.echo(f"INFO: wrote {path}", err=True)


def _report_outputs(
    report: EvalReport, output: Optional[Path], svg: Optional[Path]
) -> dict[Path, str]:
    outputs = {}
    if output is not None:
        outputs[output] = render_records(report)
    if svg is not None:
        outputs[svg] = render_svg(report)
    return outputs


@cli.command()
def simulate(
    ctx: typer.Context,
    output: OUTPUT_DIR_OPT = None,
    seed: SEED_OPT = None,
    n_frames: N_FRAMES_OPT = None,
    n_pellets: N_PELLETS_OPT = None,
    noise_sigma: NOISE_OPT = None,
    dropout_prob: DROPOUT_OPT = None,
    clutter_rate: CLUTTER_OPT = None,
    shake_amplitude: SHAKE_AMPLITUDE_OPT = None,
    shake_period: SHAKE_PERIOD_OPT = None,
    smoothing_radius: SMOOTHING_OPT = None,
):
    """Generate a synthetic recording with its ground truth."""
    with reported_errors():
        cfg = (
            _config(ctx)
            .override(
                "scenario",
                seed=seed,
                n_frames=n_frames,
                n_pellets=n_pellets,
                noise_sigma=noise_sigma,
                dropout_prob=dropout_prob,
                clutter_rate=clutter_rate,
                shake_amplitude=shake_amplitude,
                shake_period=shake_period,
            )
            .override("stabilization", smoothing_radius=smoothing_radius)
        )
        out_dir = output or cfg.paths.output or Path(".")
        scenario = generate(cfg.scenario, cfg.stabilization)

        outputs = {
            out_dir / DETECTIONS_FILE: render_table(
                FileKind.DETECTIONS, detections_frame(scenario.detections)
            ),
            out_dir / RIPPLES_FILE: render_table(
                FileKind.RIPPLES, ripples_frame(scenario.ripples)
            ),
            out_dir / GROUND_TRUTH_FILE: render_table(
                FileKind.GROUND_TRUTH,
                ground_truth_frame(scenario.ground_truth),
            ),
        }
        if scenario.transforms is not None:
            outputs[out_dir / TRANSFORMS_FILE] = render_table(
                FileKind.TRANSFORMS, transforms_frame(scenario.transforms)
            )
        typer.echo(
            f"INFO: {scenario.n_frames} frames, "
            f"{len(scenario.ground_truth)} pellets, "
            f"{scenario.clutter_count} clutter detections",
            err=True,
        )
        _write_all(outputs)


@cli.command()
def track(
    ctx: typer.Context,
    detections: Annotated[
        Optional[Path],
        typer.Option(help="Detection file."),
    ] = None,
    ripples: Annotated[
        Optional[Path],
        typer.Option(
            help="Ripple file. Defaults to the ripple rows of the detection file."
        ),
    ] = None,
    transforms: Annotated[
        Optional[Path],
        typer.Option(help="Camera transforms; enables stabilisation."),
    ] = None,
    output: Annotated[
        Optional[Path],
        typer.Option("--output", "-o", help="Trajectory file to write."),
    ] = None,
    commit_count: COMMIT_COUNT_OPT = None,
    cut_fraction: CUT_FRACTION_OPT = None,
    angle_tolerance: ANGLE_OPT = None,
    max_misses: MAX_MISSES_OPT = None,
    smoothing_radius: SMOOTHING_OPT = None,
    include_tentative: Annotated[
        bool,
        typer.Option(help="Also write trajectories that never committed."),
    ] = False,
):
    """Map pellet trajectories from per-frame detections."""
    with reported_errors():
        cfg = (
            _config(ctx)
            .override(
                "tracker",
                commit_count=commit_count,
                cut_fraction=cut_fraction,
                angle_tolerance=angle_tolerance,
                max_misses=max_misses,
            )
            .override("stabilization", smoothing_radius=smoothing_radius)
        )
        detections = _required(
            detections, cfg.paths.detections, "detections"
        )
        output = _required(output, cfg.paths.trajectories, "trajectories")
        ripples = ripples or cfg.paths.ripples or detections
        transforms = transforms or cfg.paths.transforms

        frame_dets = read_detections(detections)
        ripple_pairs = read_ripples(ripples)
        samples = None
        if transforms is not None:
            samples = read_transforms(transforms)
            frame_dets = stabilize(
                frame_dets,
                samples,
                cfg.stabilization,
                cfg.tracker.frame_w,
                cfg.tracker.frame_h,
            )

        tracker = Tracker(cfg.tracker)
        tracker.run(
            frame_dets,
            ripple_pairs,
            _frame_count(frame_dets, ripple_pairs, samples),
        )
        found = tracker.results()
        if include_tentative:
            found = tracker.trajectories
        typer.echo(f"INFO: {len(found)} trajectories", err=True)
        _write_all(
            {
                output: render_table(
                    FileKind.TRAJECTORIES, trajectories_frame(found)
                )
            }
        )


def _scenario_from_files(
    cfg: RunConfig,
    detections: Path,
    ripples: Path,
    ground_truth: Path,
    transforms: Optional[Path],
) -> Scenario:
    frame_dets = read_detections(detections)
    ripple_pairs = read_ripples(ripples)
    samples = read_transforms(transforms) if transforms else None
    n_frames = _frame_count(frame_dets, ripple_pairs, samples)
    return Scenario(
        config=replace(cfg.scenario, n_frames=max(n_frames, 1)),
        detections=frame_dets,
        ripples=ripple_pairs,
        ground_truth=read_ground_truth(ground_truth),
        transforms=samples,
    )


@cli.command(name="eval")
def evaluate_cmd(
    ctx: typer.Context,
    trajectories: Annotated[
        Optional[Path], typer.Option(help="Trajectory file to evaluate.")
    ] = None,
    ground_truth: Annotated[
        Optional[Path], typer.Option(help="Ground truth file.")
    ] = None,
    ripples: Annotated[
        Optional[Path],
        typer.Option(help="Ripple file, used to check arrivals."),
    ] = None,
    sweep: Annotated[
        bool,
        typer.Option(
            "--sweep",
            help="Track the detection file once per n_f instead of reading trajectories.",
        ),
    ] = False,
    detections: Annotated[
        Optional[Path],
        typer.Option(help="Detection file, for --sweep."),
    ] = None,
    transforms: Annotated[
        Optional[Path],
        typer.Option(help="Camera transforms, for --sweep."),
    ] = None,
    output: REPORT_OPT = None,
    svg: SVG_OPT = None,
    match_threshold: THRESHOLD_OPT = None,
):
    """Compare trajectories with the ground truth."""
    with reported_errors():
        cfg = _config(ctx).override(
            "evaluation", match_threshold=match_threshold
        )
        ground_truth = _required(
            ground_truth, cfg.paths.ground_truth, "ground_truth"
        )
        if sweep:
            detections = _required(
                detections, cfg.paths.detections, "detections"
            )
            scenario = _scenario_from_files(
                cfg,
                detections,
                ripples or cfg.paths.ripples or detections,
                ground_truth,
                transforms or cfg.paths.transforms,
            )
            report = sweep_nf(scenario, cfg, progress=_progress)
        else:
            trajectories = _required(
                trajectories, cfg.paths.trajectories, "trajectories"
            )
            ripples = _required(ripples, cfg.paths.ripples, "ripples")
            records = read_trajectories(trajectories)
            gts = read_ground_truth(ground_truth)
            for index in orphans(records, gts):
                typer.echo(
                    f"WARNING: trajectory {records[index].id} shares no "
                    "frame with the ground truth",
                    err=True,
                )
            row = evaluate(
                records,
                gts,
                read_ripples(ripples),
                cfg.tracker.commit_count,
                cfg.evaluation,
                post_commit=False,
            )
            report = EvalReport((row,))

        outputs = _report_outputs(report, output, svg)
        typer.echo(render_text(report))
        _write_all(outputs)


def _progress(row: NfRow):
    typer.echo(
        f"INFO: n_f={row.nf}: {row.n} trajectories, mean {row.mean:.3f} px",
        err=True,
    )


@cli.command()
def sweep(
    ctx: typer.Context,
    seed: SEED_OPT = None,
    n_frames: N_FRAMES_OPT = None,
    n_pellets: N_PELLETS_OPT = None,
    noise_sigma: NOISE_OPT = None,
    dropout_prob: DROPOUT_OPT = None,
    clutter_rate: CLUTTER_OPT = None,
    shake_amplitude: SHAKE_AMPLITUDE_OPT = None,
    output: REPORT_OPT = None,
    svg: SVG_OPT = None,
    match_threshold: THRESHOLD_OPT = None,
):
    """Simulate a scenario and evaluate the tracker for every n_f."""
    with reported_errors():
        cfg = (
            _config(ctx)
            .override(
                "scenario",
                seed=seed,
                n_frames=n_frames,
                n_pellets=n_pellets,
                noise_sigma=noise_sigma,
                dropout_prob=dropout_prob,
                clutter_rate=clutter_rate,
                shake_amplitude=shake_amplitude,
            )
            .override("evaluation", match_threshold=match_threshold)
        )
        scenario = generate(cfg.scenario, cfg.stabilization)
        report = sweep_nf(scenario, cfg, progress=_progress)
        outputs = _report_outputs(report, output, svg)
        typer.echo(render_text(report))
        _write_all(outputs)


@cli.command()
def decode(
    ctx: typer.Context,
    raw: Annotated[
        Path, typer.Argument(help="File of raw detector predictions.")
    ],
    ref_w: Annotated[
        float, typer.Option(help="Reference width of decoded boxes (px).")
    ],
    ref_h: Annotated[
        float, typer.Option(help="Reference height of decoded boxes (px).")
    ],
    min_confidence: Annotated[
        float, typer.Option(help="Discard predictions below this.")
    ] = DEFAULT_MIN_CONFIDENCE,
    output: OUTPUT_DIR_OPT = None,
):
    """Decode raw detector predictions into detection and ripple files."""
    with reported_errors():
        cfg = _config(ctx)
        out_dir = output or cfg.paths.output or Path(".")
        frame_dets, ripple_pairs = decode_frames(
            read_raw_predictions(raw), ref_w, ref_h, min_confidence
        )
        _write_all(
            {
                out_dir / DETECTIONS_FILE: render_table(
                    FileKind.DETECTIONS, detections_frame(frame_dets)
                ),
                out_dir / RIPPLES_FILE: render_table(
                    FileKind.RIPPLES, ripples_frame(ripple_pairs)
                ),
            }
        )


def version_callback(value: bool):
    """Prints version and exits"""
    if value:
        print(f"trajmap {__version__}")
        # Exits successfully
        raise typer.Exit()


def config_callback(ctx: typer.Context, path: Optional[Path]):
    """Loads the run configuration"""
    with reported_errors():
        config = RunConfig.from_file(path) if path else RunConfig()
    ctx.obj = SimpleNamespace(config=config)


@cli.callback()
def callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        "-c",
        callback=config_callback,
        envvar="TRAJMAP_CONFIG",
        help="YAML run configuration; flags override its values.",
    ),
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Print version of trajmap",
    ),
):
    """Trajectory mapping of fish-feed pellets."""
    ...


# Generate a click group to autogenerate docs via sphinx-click:
# https://github.com/tiangolo/typer/issues/200#issuecomment-795873331

typer_click_object = typer.main.get_command(cli)
