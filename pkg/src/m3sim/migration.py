"""Carbon-aware placement: score locations and plan greedy migrations.

The greedy planner re-evaluates at every granularity boundary: it
starts at the location with the lowest intensity at t=0 and switches
whenever the current boundary's cheapest location differs from where it
is running (ties go to the lexicographically smallest location code).
The initial placement is not a migration.

Emissions integrate the active location's intensity at every series
step, so a plan's total is energy-weighted even though the switching
rule looks only at intensity.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import CoverageError, ValidationError
from .traces import CarbonTrace, TimeSeries, Unit, sample_hold_at, slice_time

__all__ = [
    "GRANULARITIES",
    "LocationResult",
    "MigrationPlan",
    "assess_locations",
    "migrate_at_granularity",
    "migration_counts",
]

# canonical planning granularities: 15 min, 1 h, 4 h, 8 h, 24 h
GRANULARITIES = (900, 3600, 14400, 28800, 86400)


@dataclass(frozen=True)
class LocationResult:
    """Emissions if the whole ensemble ran statically at one location."""

    location: str
    co2: TimeSeries  # cumulative grams on the energy grid
    total_g: float


@dataclass(frozen=True)
class MigrationPlan:
    granularity_s: int
    steps: tuple      # ((interval_index, location), ...) one per boundary
    migrations: int
    total_co2: float  # grams


def _cumulative_grams(inc_wh, intensity):
    # sequential running sum scaled once at the end, so a plan total and a
    # static total built from identical increments agree bit for bit
    return np.concatenate([[0.0], np.cumsum(inc_wh * intensity)]) / 1000.0


def _held_intensity(trace: CarbonTrace, energy: TimeSeries):
    left_edges = energy.timestamps()[:-1]
    if trace.series.end_time <= int(left_edges[-1]):
        raise CoverageError(
            f"carbon trace {trace.location} ends at {trace.series.end_time}, "
            f"shorter than the energy horizon {int(left_edges[-1])}"
        )
    return sample_hold_at(trace.series, left_edges)


def assess_locations(energy: TimeSeries, traces: dict) -> list:
    """Rank locations by total emissions for the given cumulative energy.

    Returns LocationResult entries sorted ascending by total, ties by
    location code.
    """
    if not traces:
        raise ValidationError("no locations to assess")
    if energy.unit is not Unit.WATT_HOUR:
        raise ValidationError(f"location assessment needs a watt-hour series, got {energy.unit.value}")
    if len(energy) < 2:
        raise ValidationError("energy series too short to integrate")
    inc = np.diff(energy.values)
    out = []
    for location in sorted(traces):
        trace = traces[location]
        grams = _cumulative_grams(inc, _held_intensity(trace, energy))
        co2 = TimeSeries(energy.start_time, energy.step, grams, Unit.GRAM_CO2)
        out.append(LocationResult(location=location, co2=co2, total_g=float(grams[-1])))
    out.sort(key=lambda r: (r.total_g, r.location))
    return out


def _shared_grid(intensities: dict):
    if not intensities:
        raise ValidationError("no locations to plan over")
    locations = sorted(intensities)
    ref = intensities[locations[0]]
    for loc in locations:
        s = intensities[loc]
        if s.start_time != ref.start_time or s.step != ref.step:
            raise ValidationError(
                f"location {loc}: grid mismatch (start {s.start_time}, step {s.step}) "
                f"vs (start {ref.start_time}, step {ref.step})"
            )
        if len(s) == 0:
            raise ValidationError(f"location {loc}: empty intensity series")
    n = min(len(intensities[loc]) for loc in locations)
    return locations, ref.start_time, ref.step, n


def migrate_at_granularity(intensities: dict, granularity_s: int,
                           energy: TimeSeries | None = None) -> MigrationPlan:
    """Plan greedy migrations over per-location intensity series.

    ``intensities`` maps location code to a TimeSeries on one shared
    grid. ``energy`` is an optional cumulative watt-hour series on the
    same grid weighting the emission totals; without it, totals assume a
    constant 1 kW draw.
    """
    locations, start, step, n = _shared_grid(intensities)
    if granularity_s < step or granularity_s % step != 0:
        raise ValidationError(
            f"granularity {granularity_s} must be a positive multiple of the series step {step}"
        )
    if energy is not None:
        if energy.start_time != start or energy.step != step:
            raise ValidationError(
                f"energy grid (start {energy.start_time}, step {energy.step}) does not "
                f"match the intensity grid (start {start}, step {step})"
            )
        n = min(n, len(energy) - 1)
        if n < 1:
            raise ValidationError("energy series too short to integrate")
        increments = np.diff(energy.values)[:n]
    else:
        increments = np.full(n, 1000.0 * step / 3600.0)  # constant 1 kW draw

    matrix = np.stack([intensities[loc].values[:n] for loc in locations])
    stride = granularity_s // step

    steps = []
    active = np.empty(n, dtype=np.int64)
    current = -1
    migrations = 0
    for b, i in enumerate(range(0, n, stride)):
        best = int(np.argmin(matrix[:, i]))  # argmin takes the first = smallest code
        if b == 0:
            current = best
        elif best != current:
            current = best
            migrations += 1
        steps.append((b, locations[current]))
        active[i : i + stride] = current

    chosen = matrix[active, np.arange(n)]
    total = float(_cumulative_grams(increments, chosen)[-1])
    return MigrationPlan(
        granularity_s=int(granularity_s),
        steps=tuple(steps),
        migrations=migrations,
        total_co2=total,
    )


def migration_counts(traces: dict, year: int, granularities=GRANULARITIES) -> dict:
    """Monthly migration counts for each granularity over one calendar year.

    ``traces`` maps location to CarbonTrace. Months the traces do not
    reach are skipped; covered months are keyed "YYYY-MM" and map
    granularity to the plan's migration count.
    """
    if not traces:
        raise ValidationError("no locations given")
    out = {}
    for month in range(1, 13):
        t0 = int(datetime(year, month, 1, tzinfo=timezone.utc).timestamp())
        if month == 12:
            t1 = int(datetime(year + 1, 1, 1, tzinfo=timezone.utc).timestamp())
        else:
            t1 = int(datetime(year, month + 1, 1, tzinfo=timezone.utc).timestamp())
        try:
            sliced = {loc: slice_time(tr.series, t0, t1) for loc, tr in traces.items()}
        except ValidationError:
            continue  # month outside the traces' span
        plans = {g: migrate_at_granularity(sliced, g).migrations for g in granularities}
        out[f"{year:04d}-{month:02d}"] = plans
    return out
