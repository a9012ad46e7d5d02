"""Matplotlib rendering of solver CSV files.

Everything here draws what the files already contain.  The single
computed number is the least-squares slope of the log-log error plot,
which exists only as a figure annotation; no solver quantity is ever
recomputed.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .series import TimeSeries, load_rates

# Columns that span decades in a typical run and default to a log axis.
LOG_COLUMNS = frozenset({"eps", "div_u"})


def curve_label(path):
    """Label a curve by the run directory that produced the file (the
    file itself is almost always named timeseries.csv)."""
    path = Path(path)
    return path.parent.name if path.parent.name not in ("", ".") \
        else path.stem


def plot_timeseries(csv_paths, columns, out_path, log_columns=None):
    """One stacked panel per column, one labeled curve per CSV.

    Returns the Figure (caller closes).  The output file is written
    only after every requested column is found in every input.
    """
    if not columns:
        raise ValueError("no columns requested")
    log_columns = LOG_COLUMNS if log_columns is None else set(log_columns)
    series = [TimeSeries.from_csv(p) for p in csv_paths]
    for s in series:
        for name in columns:
            s.column(name)

    fig, axes = plt.subplots(len(columns), 1, sharex=True, squeeze=False,
                             figsize=(7.0, 1.0 + 2.0 * len(columns)))
    for ax, name in zip(axes[:, 0], columns):
        for s, p in zip(series, csv_paths):
            ax.plot(s.column("t"), s.column(name), lw=1.2,
                    label=curve_label(p))
        ax.set_ylabel(name)
        if name in log_columns:
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
    axes[0, 0].legend(loc="best", fontsize="small")
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    return fig


def plot_convergence(rates_csv, out_path):
    """Log-log error-vs-k plot with the fitted slope annotated.

    Returns (Figure, fitted slope).  The slope is the least-squares fit
    over all points of the study, annotated on the figure.
    """
    k, err = load_rates(rates_csv)
    slope, intercept = np.polyfit(np.log(k), np.log(err), 1)

    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    ax.loglog(k, err, "o-", lw=1.2, label="measured")
    ax.loglog(k, np.exp(intercept) * k ** slope, "--", lw=1.0,
              label="fit: slope %.2f" % slope)
    ax.set_xlabel("time step k")
    ax.set_ylabel("final-time L2 velocity error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    ax.annotate("fitted slope %.2f" % slope, xy=(0.05, 0.92),
                xycoords="axes fraction")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    return fig, slope
