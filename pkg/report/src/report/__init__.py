"""Offline figure rendering for penaltyflow CSV output.

Reads the solver's ``timeseries.csv`` and ``rates.csv`` files and draws
them; never recomputes any solver quantity.
"""

__version__ = "0.1.0"

from .figures import plot_convergence, plot_timeseries
from .series import MissingColumnError, TimeSeries, load_rates

__all__ = ["MissingColumnError", "TimeSeries", "load_rates",
           "plot_convergence", "plot_timeseries"]
