"""Reading and writing of trajmap tables.

Tables are parsed with pandas. Row errors are reported with the 1-based
line number of the offending row, the header being line 1. Rendering is
separate from writing so that a command can build all of its outputs
before touching the filesystem.
"""
from __future__ import annotations
from dataclasses import dataclass
from io import StringIO
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from trajmap.detector import (
    ObjectClass,
    RawPrediction,
    ripple_pair_from_boxes,
)
from trajmap.errors import FormatError
from trajmap.evaluator import EvalReport, NfRow
from trajmap.formats import FLOAT_FORMAT, FileKind
from trajmap.geometry import BBox, Detection, Point, RipplePair
from trajmap.polyfit import Quadratic
from trajmap.simulator import GroundTruthTrack
from trajmap.stabilizer import TransformSample
from trajmap.tracker import PointSource, TrackPoint, Trajectory

BOX_KINDS = (FileKind.DETECTIONS, FileKind.RIPPLES)
STATUSES = ("growing", "committed", "arrived", "exited", "lost")


@dataclass(frozen=True)
class TrajectoryRecord:
    """A trajectory as stored in a trajectory file."""

    id: int
    status: str
    curve: Optional[Quadratic]
    points: tuple[TrackPoint, ...]

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> TrajectoryRecord:
        return cls(traj.id, traj.status, traj.curve, traj.points)

    def positions(self) -> dict[int, Point]:
        return {tp.frame: tp.point for tp in self.points}


def read_table(path: Path, kind: FileKind) -> pd.DataFrame:
    """Parse a table file into a DataFrame indexed by line number.

    Detection and ripple files share their schema and are accepted for
    one another.
    """
    path = Path(path)
    with open(path) as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise FormatError("Empty file", path=path, line=1)
    found = FileKind.from_header(lines[0], path)
    if found is not kind and not {found, kind} <= set(BOX_KINDS):
        raise FormatError(
            f"Expected a {kind.value} file, got {found.value}",
            path=path,
            line=1,
        )

    numbered = [
        (number, line)
        for number, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    for number, line in numbered:
        n_fields = line.count(",") + 1
        if n_fields != len(kind.fields):
            raise FormatError(
                f"Expected {len(kind.fields)} fields, got {n_fields}",
                path=path,
                line=number,
            )
    if not numbered:
        return pd.DataFrame(columns=list(kind.fields))

    table = pd.read_csv(
        StringIO("\n".join(line for _, line in numbered)),
        header=None,
        names=list(kind.fields),
        dtype=str,
        keep_default_na=False,
    )
    table.index = [number for number, _ in numbered]
    for name in kind.fields:
        raw = table[name].str.strip()
        if name in kind.text_fields:
            table[name] = raw
            continue
        values = pd.to_numeric(raw, errors="coerce")
        empty_ok = (raw == "") & (name in kind.optional_fields)
        bad = (values.isna() & ~empty_ok) | np.isinf(values)
        if name in kind.integer_fields:
            bad |= values.notna() & (values != values.round())
        if bad.any():
            number = bad[bad].index[0]
            raise FormatError(
                f"Invalid {name}: {table.at[number, name]!r}",
                path=path,
                line=number,
            )
        if name in kind.integer_fields:
            values = values.astype(int)
        table[name] = values
    return table


def _check_values(
    table: pd.DataFrame, name: str, allowed: Iterable[str], path: Path
):
    allowed = set(allowed)
    bad = ~table[name].isin(allowed)
    if bad.any():
        number = bad[bad].index[0]
        raise FormatError(
            f"Invalid {name}: {table.at[number, name]!r} "
            f"(expected one of {sorted(allowed)})",
            path=path,
            line=number,
        )


def _check_frames(table: pd.DataFrame, path: Path):
    bad = table["frame"] < 0
    if bad.any():
        raise FormatError(
            "Frame indices must be non-negative",
            path=path,
            line=bad[bad].index[0],
        )


def render_table(kind: FileKind, frame: pd.DataFrame) -> str:
    """Text of a table file: the header line and one row per record."""
    frame = frame.reindex(columns=list(kind.fields))
    numeric = [f for f in kind.fields if f not in kind.text_fields]
    frame = frame.astype(
        {f: int if f in kind.integer_fields else float for f in numeric}
    )
    body = frame.to_csv(
        index=False,
        header=False,
        float_format=FLOAT_FORMAT,
        lineterminator="\n",
    )
    return f"{kind.header()}\n{body}"


def write_table(path: Path, kind: FileKind, frame: pd.DataFrame):
    write_text(path, render_table(kind, frame))


def write_text(path: Path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as handle:
        handle.write(text)


def _box_rows(
    frame: int, box: BBox, object_class: ObjectClass
) -> dict[str, object]:
    return {
        "frame": frame,
        "cx": box.cx,
        "cy": box.cy,
        "w": box.w,
        "h": box.h,
        "class": object_class.value,
    }


def detections_frame(
    detections: Mapping[int, Sequence[Detection]],
) -> pd.DataFrame:
    rows = [
        _box_rows(frame, d.box, ObjectClass.NUTRIMENT)
        for frame in sorted(detections)
        for d in detections[frame]
    ]
    return pd.DataFrame(rows, columns=list(FileKind.DETECTIONS.fields))


def ripples_frame(ripples: Mapping[int, RipplePair]) -> pd.DataFrame:
    """Two rows per frame, left box first; one row when both sides are
    the same box."""
    rows = []
    for frame in sorted(ripples):
        pair = ripples[frame]
        boxes = [pair.left] if pair.left == pair.right else list(pair.boxes)
        rows.extend(_box_rows(frame, b, ObjectClass.RIPPLE) for b in boxes)
    return pd.DataFrame(rows, columns=list(FileKind.RIPPLES.fields))


def transforms_frame(transforms: Sequence[TransformSample]) -> pd.DataFrame:
    values = np.array([t.as_tuple() for t in transforms]).reshape(-1, 3)
    frame = pd.DataFrame(values, columns=["dx", "dy", "da"])
    frame.insert(0, "frame", range(len(transforms)))
    return frame


def ground_truth_frame(tracks: Sequence[GroundTruthTrack]) -> pd.DataFrame:
    rows = [
        {"gt_id": t.id, "frame": f, "x": p.x, "y": p.y}
        for t in tracks
        for f, p in t.positions().items()
    ]
    return pd.DataFrame(rows, columns=list(FileKind.GROUND_TRUTH.fields))


def trajectories_frame(
    trajectories: Sequence[Trajectory | TrajectoryRecord],
) -> pd.DataFrame:
    rows = []
    for traj in trajectories:
        coefficients = (math.nan,) * 3
        if traj.curve is not None:
            coefficients = traj.curve.as_tuple()
        for tp in traj.points:
            rows.append(
                {
                    "traj_id": traj.id,
                    "frame": tp.frame,
                    "x": tp.point.x,
                    "y": tp.point.y,
                    "source": tp.source.value,
                    **dict(zip(("a1", "a2", "a3"), coefficients)),
                    "state": traj.status,
                }
            )
    return pd.DataFrame(rows, columns=list(FileKind.TRAJECTORIES.fields))


def raw_predictions_frame(raws: Sequence[RawPrediction]) -> pd.DataFrame:
    rows = [
        {
            "frame": r.frame,
            "px": r.px,
            "py": r.py,
            "pw": r.pw,
            "ph": r.ph,
            "cell_x": r.cell_x,
            "cell_y": r.cell_y,
            "confidence": r.confidence,
            "class": r.object_class.value,
        }
        for r in raws
    ]
    return pd.DataFrame(rows, columns=list(FileKind.RAW_PREDICTIONS.fields))


def read_detections(path: Path) -> dict[int, list[Detection]]:
    """Detections by frame; ripple rows of the file are skipped."""
    table = read_table(path, FileKind.DETECTIONS)
    _check_frames(table, path)
    _check_values(table, "class", [c.value for c in ObjectClass], path)
    detections: dict[int, list[Detection]] = {}
    for number, row in table.iterrows():
        if row["class"] != ObjectClass.NUTRIMENT.value:
            continue
        frame = int(row["frame"])
        box = _read_box(row, path, number)
        detections.setdefault(frame, []).append(Detection.from_box(frame, box))
    return detections


def _read_box(row: pd.Series, path: Path, number: int) -> BBox:
    try:
        return BBox(row["cx"], row["cy"], row["w"], row["h"])
    except ValueError as err:
        raise FormatError(str(err), path=path, line=number) from err


def read_ripples(path: Path) -> dict[int, RipplePair]:
    """Ripple pairs by frame, from the ripple rows of a detection or
    ripple file."""
    table = read_table(path, FileKind.RIPPLES)
    _check_frames(table, path)
    _check_values(table, "class", [c.value for c in ObjectClass], path)
    boxes: dict[int, list[BBox]] = {}
    for number, row in table.iterrows():
        if row["class"] != ObjectClass.RIPPLE.value:
            continue
        frame_boxes = boxes.setdefault(int(row["frame"]), [])
        if len(frame_boxes) == 2:
            raise FormatError(
                f"More than two ripple boxes in frame {row['frame']}",
                path=path,
                line=number,
            )
        frame_boxes.append(_read_box(row, path, number))
    return {
        frame: ripple_pair_from_boxes(frame, frame_boxes)
        for frame, frame_boxes in sorted(boxes.items())
    }


def read_transforms(path: Path) -> list[TransformSample]:
    """Per-frame transforms; frames must run 0, 1, 2, ... without gaps."""
    table = read_table(path, FileKind.TRANSFORMS)
    expected = np.arange(len(table))
    bad = table["frame"].to_numpy() != expected
    if bad.any():
        number = table.index[int(np.argmax(bad))]
        raise FormatError(
            f"Expected frame {expected[bad][0]}", path=path, line=number
        )
    return [
        TransformSample(row.dx, row.dy, row.da)
        for row in table.itertuples(index=False)
    ]


def _plain(values: dict) -> dict:
    return {
        k: v.item() if isinstance(v, np.generic) else v
        for k, v in values.items()
    }


def _consecutive(frames: pd.Series) -> bool:
    values = frames.to_numpy()
    return bool(np.all(np.diff(values) == 1))


def read_ground_truth(path: Path) -> list[GroundTruthTrack]:
    """Ground truth tracks ordered by id."""
    table = read_table(path, FileKind.GROUND_TRUTH)
    _check_frames(table, path)
    tracks = []
    for gt_id, rows in table.groupby("gt_id", sort=True):
        if not _consecutive(rows["frame"]):
            raise FormatError(
                f"Track {gt_id} frames are not consecutive",
                path=path,
                line=rows.index[0],
            )
        points = tuple(
            Point(float(x), float(y)) for x, y in zip(rows["x"], rows["y"])
        )
        tracks.append(
            GroundTruthTrack(int(gt_id), int(rows["frame"].iloc[0]), points)
        )
    return tracks


def read_trajectories(path: Path) -> list[TrajectoryRecord]:
    """Trajectories ordered by id."""
    table = read_table(path, FileKind.TRAJECTORIES)
    _check_frames(table, path)
    _check_values(table, "source", [s.value for s in PointSource], path)
    _check_values(table, "state", STATUSES, path)
    records = []
    for traj_id, rows in table.groupby("traj_id", sort=True):
        first = rows.index[0]
        if not _consecutive(rows["frame"]):
            raise FormatError(
                f"Trajectory {traj_id} frames are not consecutive",
                path=path,
                line=first,
            )
        per_track = rows[["a1", "a2", "a3", "state"]].drop_duplicates()
        if len(per_track) > 1:
            raise FormatError(
                f"Trajectory {traj_id} changes coefficients or state",
                path=path,
                line=per_track.index[1],
            )
        state = per_track["state"].iloc[0]
        coefficients = per_track[["a1", "a2", "a3"]].iloc[0]
        missing = coefficients.isna()
        if missing.all():
            curve = None
        elif missing.any():
            raise FormatError(
                f"Trajectory {traj_id} has incomplete coefficients",
                path=path,
                line=first,
            )
        else:
            curve = Quadratic(*map(float, coefficients))
        points = tuple(
            TrackPoint(int(f), Point(float(x), float(y)), PointSource(s))
            for f, x, y, s in zip(
                rows["frame"], rows["x"], rows["y"], rows["source"]
            )
        )
        records.append(TrajectoryRecord(int(traj_id), state, curve, points))
    return records


def read_raw_predictions(path: Path) -> list[RawPrediction]:
    table = read_table(path, FileKind.RAW_PREDICTIONS)
    raws = []
    for number, row in table.iterrows():
        values = _plain(row.to_dict())
        values["object_class"] = values.pop("class")
        try:
            raws.append(RawPrediction(**values))
        except ValidationError as err:
            message = err.errors()[0]["msg"]
            raise FormatError(message, path=path, line=number) from err
    return raws


def read_report(path: Path) -> EvalReport:
    table = read_table(path, FileKind.REPORT)
    if table.empty:
        raise FormatError("Report has no rows", path=path, line=1)
    rows = [NfRow(**_plain(r)) for r in table.to_dict("records")]
    return EvalReport(tuple(rows))
