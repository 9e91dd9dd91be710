"""Rendering of evaluation reports."""
from trajmap.report.plot import render_svg
from trajmap.report.table import render_records, render_text

__all__ = ["render_records", "render_svg", "render_text"]
