"""Static SVG figures of step responses.

Figures are written with fixed SVG ids and no date stamp, so the same trace
always produces the same bytes. Text is emitted as paths, which keeps the
files free of font references and scripts.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "fuzzypid",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.5,
}

_COLORS = {"open-loop": "tab:gray", "pid": "tab:blue", "fuzzy-pid": "tab:red"}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_step_response(trace, path, title: str = "", color: str = "tab:blue"):
    """Speed against time with the setpoint as a dashed line."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(trace.t, trace.speed, color=color, label="speed")
        ax.plot(trace.t, trace.setpoint, "k--", linewidth=1, label="setpoint")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("speed")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, path)


def plot_comparison(comparison, path):
    """Overlay of every successful column of a comparison."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        setpoint = None
        t_max = 0.0
        for col in comparison.columns:
            if col.trace is None:
                continue
            tr = col.trace
            ax.plot(tr.t, tr.speed, color=_COLORS.get(col.config.controller), label=col.title)
            setpoint = tr.setpoint[-1]
            t_max = max(t_max, float(tr.t[-1]))
        if setpoint is not None:
            ax.axhline(setpoint, color="k", linestyle="--", linewidth=1, label="setpoint")
        ax.set_xlim(0, t_max or 1)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("speed")
        ax.set_title("Step responses")
        ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, path)
