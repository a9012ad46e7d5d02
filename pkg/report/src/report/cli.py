"""Command-line entry: render figures from solver CSV files."""

import argparse
import sys

import matplotlib.pyplot as plt

from .figures import plot_convergence, plot_timeseries
from .series import MissingColumnError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render figures from penaltyflow CSV output.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ts = sub.add_parser(
        "timeseries",
        help="stacked per-column panels from timeseries.csv files")
    p_ts.add_argument("out_png", help="output image path")
    p_ts.add_argument("columns",
                      help="comma-separated column names, "
                           "e.g. eps,k,div_u,ut_norm")
    p_ts.add_argument("csv", nargs="+", help="timeseries.csv path(s)")

    p_rt = sub.add_parser(
        "rates", help="log-log convergence plot from a rates.csv")
    p_rt.add_argument("out_png", help="output image path")
    p_rt.add_argument("rates_csv", help="rates.csv path")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "timeseries":
            columns = [c for c in args.columns.split(",") if c]
            fig = plot_timeseries(args.csv, columns, args.out_png)
            plt.close(fig)
            print("wrote %s (%d panels, %d curves each)"
                  % (args.out_png, len(columns), len(args.csv)))
        else:
            fig, slope = plot_convergence(args.rates_csv, args.out_png)
            plt.close(fig)
            print("wrote %s (fitted slope %.4f)" % (args.out_png, slope))
    except (OSError, ValueError, MissingColumnError) as exc:
        print("report: error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
