"""Line-oriented table formats exchanged between commands.

Every file starts with a single header line naming its kind, schema
version and fields, followed by comma-separated rows::

    # trajmap-detections/1: frame,cx,cy,w,h,class
    0,1800.000000,120.000000,11.000000,20.000000,nutriment
"""
from __future__ import annotations
from enum import Enum
from pathlib import Path
import re
from typing import Optional

from trajmap.errors import FormatError

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.6f"
HEADER_PATTERN = re.compile(
    r"^# trajmap-(?P<kind>[a-z-]+)/(?P<version>\d+): (?P<fields>.*)$"
)


class FileKind(str, Enum):
    """Enumeration of all supported table kinds."""

    DETECTIONS = "detections"
    RIPPLES = "ripples"
    TRANSFORMS = "transforms"
    GROUND_TRUTH = "ground-truth"
    TRAJECTORIES = "trajectories"
    RAW_PREDICTIONS = "raw-predictions"
    REPORT = "report"

    @property
    def fields(self) -> tuple[str, ...]:
        match self.name:
            case "DETECTIONS" | "RIPPLES":
                return ("frame", "cx", "cy", "w", "h", "class")
            case "TRANSFORMS":
                return ("frame", "dx", "dy", "da")
            case "GROUND_TRUTH":
                return ("gt_id", "frame", "x", "y")
            case "TRAJECTORIES":
                return (
                    "traj_id",
                    "frame",
                    "x",
                    "y",
                    "source",
                    "a1",
                    "a2",
                    "a3",
                    "state",
                )
            case "RAW_PREDICTIONS":
                return (
                    "frame",
                    "px",
                    "py",
                    "pw",
                    "ph",
                    "cell_x",
                    "cell_y",
                    "confidence",
                    "class",
                )
            case "REPORT":
                return (
                    "nf",
                    "n",
                    "mean",
                    "std_dev",
                    "std_error",
                    "ci_low",
                    "ci_high",
                    "detected_fraction",
                    "precision_trajectory",
                )

    @property
    def integer_fields(self) -> tuple[str, ...]:
        integers = ("frame", "gt_id", "traj_id", "nf", "n")
        return tuple(f for f in self.fields if f in integers)

    @property
    def text_fields(self) -> tuple[str, ...]:
        return tuple(
            f for f in self.fields if f in ("class", "source", "state")
        )

    @property
    def optional_fields(self) -> tuple[str, ...]:
        """Numeric fields that may be left empty."""
        match self.name:
            case "TRAJECTORIES":
                return ("a1", "a2", "a3")
            case "REPORT":
                return (
                    "mean",
                    "std_dev",
                    "std_error",
                    "ci_low",
                    "ci_high",
                )
            case _:
                return ()

    def header(self) -> str:
        """
        Example
        -------
        >>> FileKind.TRANSFORMS.header()
        '# trajmap-transforms/1: frame,dx,dy,da'
        """
        fields = ",".join(self.fields)
        return f"# trajmap-{self.value}/{SCHEMA_VERSION}: {fields}"

    @classmethod
    def from_header(
        cls, line: str, path: Optional[Path] = None
    ) -> FileKind:
        """Kind declared by a header line.

        Examples
        --------
        >>> FileKind.from_header("# trajmap-ground-truth/1: gt_id,frame,x,y")
        <FileKind.GROUND_TRUTH: 'ground-truth'>
        >>> FileKind.from_header("frame,cx")
        Traceback (most recent call last):
          ...
        trajmap.errors.FormatError: Missing trajmap header
        """
        found = HEADER_PATTERN.match(line.rstrip("\r\n"))
        if not found:
            raise FormatError("Missing trajmap header", path=path, line=1)
        try:
            kind = cls(found["kind"])
        except ValueError:
            supported = [k.value for k in cls]
            raise FormatError(
                f"Unsupported file kind: {found['kind']}. "
                f"Supported kinds: {supported}",
                path=path,
                line=1,
            )
        if int(found["version"]) != SCHEMA_VERSION:
            raise FormatError(
                f"Unsupported schema version {found['version']} "
                f"(expected {SCHEMA_VERSION})",
                path=path,
                line=1,
            )
        fields = tuple(found["fields"].split(","))
        if fields != kind.fields:
            raise FormatError(
                f"Expected fields {','.join(kind.fields)}, "
                f"got {found['fields']}",
                path=path,
                line=1,
            )
        return kind

    @classmethod
    def from_path(cls, path: Path) -> FileKind:
        """Kind of an existing file, read from its header."""
        with open(path) as handle:
            return cls.from_header(handle.readline(), path)
