"""Prediction accuracy scores between a reference and a simulated series.

All scores compare over the first min(len(real), len(sim)) samples.
MAPE is reported in percent and is undefined when the reference
contains a zero in the compared range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .traces import TimeSeries

__all__ = ["AccuracyReport", "mape", "rmse", "mae", "score"]


@dataclass(frozen=True)
class AccuracyReport:
    metric: str
    value: float
    n: int  # samples compared


def _aligned(real, sim):
    if isinstance(real, TimeSeries) and isinstance(sim, TimeSeries):
        if real.start_time != sim.start_time or real.step != sim.step:
            raise ValidationError(
                f"series grids differ: (start {real.start_time}, step {real.step}) "
                f"vs (start {sim.start_time}, step {sim.step})"
            )
    r = real.values if isinstance(real, TimeSeries) else np.asarray(real, dtype=np.float64)
    s = sim.values if isinstance(sim, TimeSeries) else np.asarray(sim, dtype=np.float64)
    n = min(r.size, s.size)
    if n == 0:
        raise ValidationError("cannot score empty series")
    return r[:n], s[:n], n


def mape(real, sim) -> float:
    """Mean absolute percentage error, in percent."""
    r, s, n = _aligned(real, sim)
    if np.any(r == 0):
        raise ValidationError("MAPE undefined at zero reference")
    return float(np.mean(np.abs((r - s) / r)) * 100.0)


def rmse(real, sim) -> float:
    r, s, _ = _aligned(real, sim)
    return float(np.sqrt(np.mean((r - s) ** 2)))


def mae(real, sim) -> float:
    r, s, _ = _aligned(real, sim)
    return float(np.mean(np.abs(r - s)))


_SCORERS = {"mape": mape, "rmse": rmse, "mae": mae}


def score(metric: str, real, sim) -> AccuracyReport:
    """Score by metric name; see mape/rmse/mae."""
    try:
        fn = _SCORERS[str(metric).lower()]
    except KeyError:
        raise ValidationError(f"unknown accuracy metric {metric!r} "
                              f"(expected mape, rmse, or mae)") from None
    _, _, n = _aligned(real, sim)
    return AccuracyReport(metric=str(metric).lower(), value=fn(real, sim), n=n)
