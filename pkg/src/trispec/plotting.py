"""Static SVG figures for metric scatters and running statistics."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InvalidParameterError, TrispecError  # noqa: E402

__all__ = ["PLOT_RC", "emit_plot"]

PLOT_RC = {
    "figure.figsize": (7.0, 4.2),
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "trispec",
    "svg.fonttype": "none",
}


def emit_plot(data, path, kind: str = "scatter", *, title: str = "", ylabel: str = "",
              xlabel: str = "eigenvalue index", hlines=(), labels=None):
    """Write a scatter of a metric against eigenvalue index, or line curves.

    Parameters
    ----------
    data : array or sequence of arrays
        One series for ``kind="scatter"``; one or more for ``kind="line"``.
    path : str or Path
        Output file; the format follows the suffix (``.svg`` recommended).
    hlines : sequence of float
        Horizontal reference levels drawn as dashed lines.
    labels : sequence of str, optional
        Legend entries for line curves.
    """
    series = [np.asarray(data, dtype=float)] if kind == "scatter" else [np.asarray(d, dtype=float) for d in data]
    if not series or any(s.size == 0 for s in series):
        raise InvalidParameterError("cannot plot empty data")
    if kind not in ("scatter", "line"):
        raise InvalidParameterError(f"unknown plot kind {kind!r}")
    with plt.rc_context(PLOT_RC):
        fig, ax = plt.subplots()
        for k, s in enumerate(series):
            idx = np.arange(1, s.size + 1)
            label = labels[k] if labels else None
            if kind == "scatter":
                ax.scatter(idx, s, s=4, color="k", linewidths=0, label=label)
            else:
                ax.plot(idx, s, label=label)
        for level in hlines:
            ax.axhline(level, color="tab:red", lw=0.7, ls="--")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if labels:
            ax.legend(frameon=False)
        fig.tight_layout()
        try:
            fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
        except OSError as exc:
            raise TrispecError(f"cannot write plot to {path}: {exc}") from exc
        finally:
            plt.close(fig)
    return path
