"""Exceptions raised by trajmap.

Validation problems derive from ValueError so that callers can catch them
alongside pydantic's own validation errors. The CLI maps each family to an
exit code, see :data:`EXIT_CODES`.
"""
from pathlib import Path
from typing import Optional


class TrajmapError(Exception):
    """Base class for all trajmap errors."""


class InsufficientPoints(TrajmapError, ValueError):
    ...


class SingularSystem(TrajmapError, ValueError):
    ...


class EmptyInput(TrajmapError, ValueError):
    ...


class FrameOutOfRange(TrajmapError, ValueError):
    ...


class NonPositiveReference(TrajmapError, ValueError):
    ...


class MissingRipple(TrajmapError, ValueError):
    ...


class TooFewPoints(TrajmapError, ValueError):
    ...


class OutOfOrderFrame(TrajmapError, ValueError):
    ...


class InvalidConfig(TrajmapError, ValueError):
    ...


class NoOverlap(TrajmapError, ValueError):
    ...


class TooFewSamples(TrajmapError, ValueError):
    ...


class FormatError(TrajmapError, ValueError):
    """A malformed input file.

    Examples
    --------
    >>> str(FormatError("expected 6 fields", path=Path("d.csv"), line=3))
    'd.csv:3: expected 6 fields'
    """

    def __init__(
        self,
        message: str,
        path: Optional[Path] = None,
        line: Optional[int] = None,
    ):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{location} {message}" if location else message)


class InvariantViolation(TrajmapError, RuntimeError):
    """An internal consistency check failed."""


# Ordered: first matching class wins.
EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (InvariantViolation, 3),
    (FormatError, 2),
    (OSError, 2),
    (ValueError, 1),
]


def exit_code_for(err: BaseException) -> int:
    """Exit code of the CLI for a given exception.

    Examples
    --------
    >>> exit_code_for(FileNotFoundError("x"))
    2
    >>> exit_code_for(InvalidConfig("n_frames must be positive"))
    1
    >>> exit_code_for(InvariantViolation("claimed twice"))
    3
    """
    for kind, code in EXIT_CODES:
        if isinstance(err, kind):
            return code
    return 3
