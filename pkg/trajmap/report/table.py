"""Text and CSV renderings of an :class:`~trajmap.evaluator.EvalReport`."""
import pandas as pd

from trajmap.evaluator import EvalReport
from trajmap.formats import FileKind
from trajmap.io import render_table

COLUMNS = {
    "nf": "n_f",
    "n": "N",
    "mean": "Mean (px)",
    "std_dev": "Std. Deviation (px)",
    "std_error": "Std. Error Mean (px)",
    "ci_low": "95% CI Lower (px)",
    "ci_high": "95% CI Upper (px)",
    "detected_fraction": "Detected",
    "precision_trajectory": "Precision",
}


def render_text(report: EvalReport) -> str:
    """One row per n_f, followed by the best n_f.

    Examples
    --------
    >>> from trajmap.evaluator import NfRow
    >>> row = NfRow(6, 30, 21.32, 3.08, 0.5623, 20.17, 22.47, 1.0, 0.9)
    >>> print(render_text(EvalReport((row,))).splitlines()[-1])
    best n_f: 6
    """
    table: pd.DataFrame = report.to_frame().rename(columns=COLUMNS)
    body = table.to_string(index=False, float_format="{:.2f}".format)
    return f"{body}\n\nbest n_f: {report.best_nf}\n"


def render_records(report: EvalReport) -> str:
    """Machine-readable report, in the trajmap table format."""
    return render_table(FileKind.REPORT, report.to_frame())
