"""Multi-Model assembly: per-model series windowed onto a shared coarse grid.

A window of size m averages m consecutive samples; the output keeps the
input's start timestamp and multiplies the step by m. The final window
may be partial and averages only the samples that exist, so a series of
n samples windows to ceil(n / m) samples and a window of size 1 is the
identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .traces import TimeSeries

__all__ = ["Metric", "WindowSpec", "MultiModel", "window", "assemble", "totals"]


class Metric(str, Enum):
    """Which per-model series the analysis consumes."""

    POWER = "power"
    ENERGY = "energy_cumulative"
    CO2 = "co2_cumulative"

    @classmethod
    def parse(cls, label: str) -> "Metric":
        aliases = {
            "power": cls.POWER,
            "energy": cls.ENERGY,
            "energy_cumulative": cls.ENERGY,
            "co2": cls.CO2,
            "co2_cumulative": cls.CO2,
        }
        try:
            return aliases[str(label).lower()]
        except KeyError:
            raise ValidationError(f"unknown metric {label!r} "
                                  f"(expected power, energy, or co2)") from None

    @property
    def cumulative(self) -> bool:
        return self is not Metric.POWER


class WindowAgg(str, Enum):
    MEAN = "mean"


@dataclass(frozen=True)
class WindowSpec:
    """Window size in samples plus the within-window aggregator."""

    size: int
    agg: WindowAgg = WindowAgg.MEAN

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or isinstance(self.size, bool):
            raise ValidationError(f"window size must be an integer, got {self.size!r}")
        if self.size < 1:
            raise ValidationError(f"window size must be >= 1, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        if not isinstance(self.agg, WindowAgg):
            object.__setattr__(self, "agg", WindowAgg(self.agg))


def window(series: TimeSeries, spec: WindowSpec) -> TimeSeries:
    """Downsample by averaging blocks of spec.size consecutive samples."""
    n = len(series)
    if n == 0:
        raise ValidationError("cannot window an empty series")
    m = spec.size
    if m == 1:
        return series
    edges = np.arange(0, n, m)
    sums = np.add.reduceat(series.values, edges)
    counts = np.diff(np.append(edges, n))
    return TimeSeries(series.start_time, series.step * m, sums / counts, series.unit)


@dataclass(frozen=True)
class MultiModel:
    """Windowed per-model series sharing one grid and unit.

    members preserve model order as (model_id, TimeSeries) pairs; member
    lengths may differ (the meta-model handles ragged coverage).
    """

    metric: Metric
    window: WindowSpec
    members: tuple  # ((model_id, TimeSeries), ...)

    def __post_init__(self):
        members = tuple((str(mid), s) for mid, s in self.members)
        if not members:
            raise ValidationError("a multi-model needs at least one member")
        ids = [mid for mid, _ in members]
        if len(set(ids)) != len(ids):
            raise ValidationError("member model ids must be unique")
        ref_id, ref = members[0]
        for mid, s in members:
            if s.start_time != ref.start_time or s.step != ref.step:
                raise ValidationError(
                    f"model {mid}: grid mismatch "
                    f"(start {s.start_time}, step {s.step}) vs "
                    f"(start {ref.start_time}, step {ref.step}) from model {ref_id}"
                )
            if s.unit is not ref.unit:
                raise ValidationError(f"model {mid}: unit {s.unit.value} differs "
                                      f"from {ref.unit.value}")
            if len(s) == 0:
                raise ValidationError(f"model {mid}: empty series")
        object.__setattr__(self, "members", members)
        if not isinstance(self.metric, Metric):
            object.__setattr__(self, "metric", Metric.parse(self.metric))

    def __len__(self):
        return len(self.members)

    @property
    def start_time(self) -> int:
        return self.members[0][1].start_time

    @property
    def step(self) -> int:
        return self.members[0][1].step

    @property
    def unit(self):
        return self.members[0][1].unit

    def ids(self):
        return tuple(mid for mid, _ in self.members)

    def series(self, model_id: str) -> TimeSeries:
        for mid, s in self.members:
            if mid == model_id:
                return s
        raise ValidationError(f"no member with model id {model_id}")


def assemble(source, metric, window_spec: WindowSpec) -> MultiModel:
    """Build a MultiModel from a SimResult or an iterable of (id, series).

    Picks the selected metric from each model result, windows it, and
    validates the shared grid. Asking for co2 without a carbon trace in
    the simulation is an error.
    """
    metric = metric if isinstance(metric, Metric) else Metric.parse(metric)
    if hasattr(source, "model_results"):
        pairs = []
        for mr in source.model_results:
            if metric is Metric.POWER:
                s = mr.power
            elif metric is Metric.ENERGY:
                s = mr.energy
            else:
                if mr.co2 is None:
                    raise ValidationError(
                        f"model {mr.model_id}: no co2 series "
                        "(simulation ran without a carbon trace)"
                    )
                s = mr.co2
            pairs.append((mr.model_id, s))
    else:
        pairs = [(mid, s) for mid, s in source]
    members = tuple((mid, window(s, window_spec)) for mid, s in pairs)
    return MultiModel(metric=metric, window=window_spec, members=members)


def totals(multi: MultiModel) -> list:
    """Final value per member, for cumulative metrics only."""
    if not multi.metric.cumulative:
        raise ValidationError(f"totals need a cumulative metric, not {multi.metric.value}")
    return [(mid, float(s.values[-1])) for mid, s in multi.members]
