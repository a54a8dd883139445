"""Meta-Model: collapse a Multi-Model into one aggregated prediction series.

Alignment uses a coverage quorum. A timestep survives when at least
``quorum`` members have a sample there; with the default quorum (all
members) this truncates to the shortest member, while quorum 1 keeps
every timestep any member covers. Aggregation at each surviving
timestep uses only the members that cover it.

Aggregation sorts each timestep's values first, which makes mean and
median bit-identical under any permutation of the member order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .multimodel import MultiModel
from .traces import TimeSeries, write_series

__all__ = ["MetaAgg", "MetaSpec", "MetaModel", "derive_meta", "export_meta"]


class MetaAgg(str, Enum):
    MEAN = "mean"
    MEDIAN = "median"  # even member count -> midpoint of the two middle values


@dataclass(frozen=True)
class MetaSpec:
    """Aggregator choice plus the coverage quorum (None = all members)."""

    agg: MetaAgg = MetaAgg.MEAN
    quorum: int | None = None

    def __post_init__(self):
        if not isinstance(self.agg, MetaAgg):
            object.__setattr__(self, "agg", MetaAgg(self.agg))
        if self.quorum is not None and self.quorum < 1:
            raise ValidationError(f"quorum must be >= 1, got {self.quorum}")


@dataclass(frozen=True)
class MetaModel:
    """The aggregated series plus how it was derived."""

    series: TimeSeries
    spec: MetaSpec
    member_count: int


def _aligned_length(lengths, quorum):
    # coverage is prefix-shaped, so the q-th longest member bounds the
    # last timestep with at least q samples
    ranked = sorted(lengths, reverse=True)
    return ranked[quorum - 1]


def derive_meta(multi: MultiModel, spec: MetaSpec = MetaSpec()) -> MetaModel:
    """Aggregate a MultiModel into a MetaModel under the given spec."""
    k = len(multi)
    quorum = k if spec.quorum is None else spec.quorum
    if quorum > k:
        raise ValidationError(f"quorum {quorum} exceeds member count {k}")
    lengths = [len(s) for _, s in multi.members]
    out_len = _aligned_length(lengths, quorum)
    if out_len == 0:
        raise ValidationError("no common timesteps across members at this quorum")

    matrix = np.full((k, out_len), np.nan)
    for row, (_, s) in enumerate(multi.members):
        take = min(len(s), out_len)
        matrix[row, :take] = s.values[:take]
    # column-sort pushes NaN padding to the bottom and makes aggregation
    # independent of member order, bit for bit
    matrix = np.sort(matrix, axis=0)
    if spec.agg is MetaAgg.MEAN:
        agg = np.nanmean(matrix, axis=0)
    else:
        agg = np.nanmedian(matrix, axis=0)
    series = TimeSeries(multi.start_time, multi.step, agg, multi.unit)
    return MetaModel(series=series, spec=MetaSpec(spec.agg, quorum), member_count=k)


def export_meta(meta: MetaModel, path, fmt: str = "csv") -> None:
    """Persist the aggregated series; read_series round-trips it exactly."""
    write_series(meta.series, path, fmt=fmt)
