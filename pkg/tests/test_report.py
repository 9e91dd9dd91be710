import math

import pytest

from trajmap.evaluator import EvalReport, NfRow
from trajmap.formats import FileKind
from trajmap.report import render_records, render_svg, render_text

REPORT = EvalReport(
    (
        NfRow(3, 28, 35.1, 9.0, 1.70, 31.6, 38.6, 0.93, 0.85),
        NfRow(6, 30, 21.32, 3.08, 0.5623, 20.17, 22.47, 1.0, 0.9),
        NfRow(9, 1, *[math.nan] * 5, 0.1, 1.0),
    )
)


def test_text_report():
    text = render_text(REPORT)
    assert "Std. Error Mean (px)" in text
    assert "21.32" in text and "0.56" in text
    assert text.rstrip().endswith("best n_f: 6")


def test_records():
    lines = render_records(REPORT).splitlines()
    assert lines[0] == FileKind.REPORT.header()
    assert lines[2].startswith("6,30,21.320000,3.080000,0.562300,")
    assert lines[3] == "9,1,,,,,,0.100000,1.000000"


def test_svg():
    pytest.importorskip("matplotlib")
    svg = render_svg(REPORT)
    assert svg.lstrip().startswith("<?xml")
    assert "<svg" in svg
    assert render_svg(REPORT) == svg
