"""Static SVG rendering of an evaluation report.

Requires the optional ``plot`` extra (matplotlib).
"""
from io import StringIO

from trajmap.evaluator import EvalReport


def render_svg(report: EvalReport) -> str:
    """Mean error with its 95% confidence interval per n_f, and the
    detection metrics on a second panel."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        from matplotlib import pyplot as plt
    except ImportError:
        raise ModuleNotFoundError(
            "matplotlib must be installed to render plots: "
            "pip install 'trajmap[plot]'"
        )

    frame = report.to_frame()
    below = frame["mean"] - frame["ci_low"]
    above = frame["ci_high"] - frame["mean"]
    with plt.rc_context({"svg.hashsalt": "trajmap"}):
        fig, (top, bottom) = plt.subplots(
            2,
            1,
            sharex=True,
            figsize=(6, 6),
            gridspec_kw={"height_ratios": (2, 1)},
        )
        top.errorbar(
            frame["nf"],
            frame["mean"],
            yerr=[below, above],
            fmt="o-",
            capsize=4,
        )
        top.set_ylabel("error distance (px)")
        top.set_title("Mean error and 95% confidence interval")
        for column, marker, label in (
            ("detected_fraction", "s-", "detected"),
            ("precision_trajectory", "^-", "precision"),
        ):
            bottom.plot(frame["nf"], frame[column], marker, label=label)
        bottom.set_ylim(0, 1.05)
        bottom.set_xlabel("n_f")
        bottom.legend(loc="lower right")

        buffer = StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buffer.getvalue()
