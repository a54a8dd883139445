"""Core data model: time series, workload traces, carbon traces, host specs.

All timestamps are UTC epoch seconds (integers). A TimeSeries owns a
uniform grid: sample i lives at ``start_time + i * step``. Ingestion
objects are immutable after construction and validate on construction,
so everything downstream can assume well-formed data.

File formats (documented, round-trip safe):

* workload CSV: header ``id,submit_time,cpu_count,duration,cpu_usage``,
  one row per fragment; rows sharing an id form that task's fragment
  list in row order.
* carbon CSV: header ``timestamp,carbon_intensity`` with a uniform
  timestamp grid; intensity is gCO2 per kWh.
* series CSV: a ``# unit=<label>`` comment line, then a
  ``timestamp,value`` header and one row per sample. Values are written
  with Python's shortest round-trip float representation, making
  read(write(s)) bit-exact.
* series binary: a small self-describing columnar container (header +
  one float64 little-endian column), value-exact and compact.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Unit",
    "TimeSeries",
    "Task",
    "WorkloadTrace",
    "CarbonTrace",
    "HostSpec",
    "load_workload",
    "load_carbon",
    "load_carbon_dir",
    "resample_hold",
    "sample_hold_at",
    "slice_time",
    "write_series",
    "read_series",
]


class Unit(str, Enum):
    """Physical unit labels carried by a TimeSeries."""

    WATT = "watt"
    WATT_HOUR = "watt_hour"
    GRAM_CO2 = "gram_co2"
    GRAM_CO2_PER_KWH = "gram_co2_per_kwh"
    FRACTION = "fraction"
    DIMENSIONLESS = "dimensionless"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A uniformly sampled series of finite floats.

    Attributes:
        start_time: epoch seconds of sample 0.
        step: seconds between samples, strictly positive.
        values: 1-D float64 array; stored read-only.
        unit: label describing what the values measure.
    """

    start_time: int
    step: int
    values: np.ndarray
    unit: Unit = Unit.DIMENSIONLESS

    def __post_init__(self):
        if not isinstance(self.start_time, (int, np.integer)) or isinstance(self.start_time, bool):
            raise ValidationError(f"start_time must be an integer, got {self.start_time!r}")
        if not isinstance(self.step, (int, np.integer)) or isinstance(self.step, bool):
            raise ValidationError(f"step must be an integer, got {self.step!r}")
        if self.step <= 0:
            raise ValidationError(f"step must be positive, got {self.step}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError(f"values must be 1-D, got shape {values.shape}")
        if values.size and not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValidationError(f"values must be finite; sample {bad} is {values[bad]}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "start_time", int(self.start_time))
        object.__setattr__(self, "step", int(self.step))
        object.__setattr__(self, "values", values)
        if not isinstance(self.unit, Unit):
            object.__setattr__(self, "unit", Unit(self.unit))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.start_time == other.start_time
            and self.step == other.step
            and self.unit is other.unit
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self):
        return hash((self.start_time, self.step, self.unit, self.values.tobytes()))

    def timestamps(self) -> np.ndarray:
        """Epoch second of every sample, as an int64 array."""
        return self.start_time + self.step * np.arange(len(self), dtype=np.int64)

    @property
    def end_time(self) -> int:
        """Exclusive end of the covered span: timestamp after the last sample."""
        return self.start_time + self.step * len(self)

    def with_values(self, values, unit=None) -> "TimeSeries":
        """New series on the same grid with different values (and optionally unit)."""
        return TimeSeries(self.start_time, self.step, values, unit or self.unit)


@dataclass(frozen=True)
class Task:
    """One schedulable unit of work.

    A task asks for ``cpu_count`` cores on a single host and runs its
    fragments back to back; each fragment is (duration_s, utilization)
    with utilization in [0, 1] applied to every requested core.
    """

    id: str
    submit_time: int
    cpu_count: int
    fragments: tuple  # ((duration_s, utilization), ...)

    def __post_init__(self):
        if self.cpu_count < 1:
            raise ValidationError(f"task {self.id}: cpu_count must be >= 1, got {self.cpu_count}")
        if self.submit_time < 0:
            raise ValidationError(f"task {self.id}: submit_time must be >= 0")
        frags = tuple((int(d), float(u)) for d, u in self.fragments)
        for d, u in frags:
            if d < 0:
                raise ValidationError(f"task {self.id}: fragment duration must be >= 0")
            if not 0.0 <= u <= 1.0:
                raise ValidationError(f"task {self.id}: utilization out of range: {u}")
        if sum(d for d, _ in frags) <= 0:
            raise ValidationError(f"task {self.id}: total duration must be > 0")
        object.__setattr__(self, "fragments", frags)

    @property
    def total_duration(self) -> int:
        return sum(d for d, _ in self.fragments)


@dataclass(frozen=True)
class WorkloadTrace:
    """An ordered, validated collection of tasks."""

    tasks: tuple

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise ValidationError("workload must contain at least one task")
        ids = [t.id for t in tasks]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(f"duplicate task id: {dup}")
        tasks = tuple(sorted(tasks, key=lambda t: (t.submit_time, t.id)))
        object.__setattr__(self, "tasks", tasks)

    def __len__(self):
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)


@dataclass(frozen=True)
class CarbonTrace:
    """Carbon intensity over time for one grid location."""

    location: str
    series: TimeSeries

    def __post_init__(self):
        if not self.location:
            raise ValidationError("carbon trace needs a non-empty location code")
        if len(self.series) == 0:
            raise ValidationError(f"carbon trace {self.location}: empty series")
        if np.any(self.series.values < 0):
            raise ValidationError(f"carbon trace {self.location}: negative intensity")


@dataclass(frozen=True)
class HostSpec:
    """Static description of one host in the simulated fleet.

    power_model is an optional per-host default; the simulator's model
    sweep applies each candidate model fleet-wide regardless.
    """

    id: int
    core_count: int
    core_speed_mhz: float | None = None
    memory_mib: int | None = None
    power_model: object | None = None

    def __post_init__(self):
        if self.core_count < 1:
            raise ValidationError(f"host {self.id}: core_count must be >= 1")


# ---------------------------------------------------------------------------
# loaders


def _open_text(path, **kw):
    try:
        return path.open(**kw)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def load_workload(path) -> WorkloadTrace:
    """Read a workload CSV (one row per fragment, grouped by task id)."""
    path = Path(path)
    expected = ["id", "submit_time", "cpu_count", "duration", "cpu_usage"]
    order: list[str] = []
    rows: dict[str, dict] = {}
    with _open_text(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
            raise ParseError(
                f"expected header {','.join(expected)}, got {reader.fieldnames}", path=path, line=1
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                tid = row["id"].strip()
                submit = int(row["submit_time"])
                cpus = int(row["cpu_count"])
                duration = int(row["duration"])
                usage = float(row["cpu_usage"])
            except (TypeError, ValueError, AttributeError) as exc:
                raise ParseError(f"bad fragment row: {exc}", path=path, line=lineno) from exc
            if not tid:
                raise ParseError("empty task id", path=path, line=lineno)
            if tid not in rows:
                rows[tid] = {"submit": submit, "cpus": cpus, "frags": []}
                order.append(tid)
            else:
                if rows[tid]["submit"] != submit or rows[tid]["cpus"] != cpus:
                    raise ParseError(
                        f"task {tid}: submit_time/cpu_count differ between fragment rows",
                        path=path,
                        line=lineno,
                    )
            rows[tid]["frags"].append((duration, usage))
    if not order:
        raise ValidationError(f"{path}: workload must contain at least one task")
    tasks = [
        Task(id=tid, submit_time=rows[tid]["submit"], cpu_count=rows[tid]["cpus"],
             fragments=tuple(rows[tid]["frags"]))
        for tid in order
    ]
    return WorkloadTrace(tasks=tuple(tasks))


def _read_timestamp_grid(path, timestamps):
    if len(timestamps) == 0:
        raise ValidationError(f"{path}: no samples")
    start = timestamps[0]
    if len(timestamps) == 1:
        return start, 1  # lone sample: step is nominal
    diffs = np.diff(timestamps)
    step = int(diffs[0])
    if step <= 0 or np.any(diffs != step):
        raise ValidationError(f"{path}: timestamps must be a uniform increasing grid")
    return int(start), step


def load_carbon(path, location=None) -> CarbonTrace:
    """Read a carbon intensity CSV; location defaults to the file stem."""
    path = Path(path)
    if location is None:
        location = path.stem
    ts, vals = [], []
    with _open_text(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != [
            "timestamp",
            "carbon_intensity",
        ]:
            raise ParseError(
                f"expected header timestamp,carbon_intensity, got {reader.fieldnames}",
                path=path,
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                ts.append(int(row["timestamp"]))
                vals.append(float(row["carbon_intensity"]))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad intensity row: {exc}", path=path, line=lineno) from exc
    start, step = _read_timestamp_grid(path, np.asarray(ts, dtype=np.int64))
    series = TimeSeries(start, step, np.asarray(vals), Unit.GRAM_CO2_PER_KWH)
    return CarbonTrace(location=str(location), series=series)


def load_carbon_dir(directory) -> dict:
    """Load every ``*.csv`` in a directory as a CarbonTrace keyed by file stem."""
    directory = Path(directory)
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise ValidationError(f"{directory}: no carbon trace files")
    return {p.stem: load_carbon(p) for p in files}


# ---------------------------------------------------------------------------
# grid operations


def resample_hold(series: TimeSeries, new_step: int) -> TimeSeries:
    """Zero-order hold onto a new grid with the same start and span.

    Each output sample takes the most recent source value at or before
    its timestamp; before the first source sample the first value holds.
    """
    if new_step <= 0:
        raise ValidationError(f"new_step must be positive, got {new_step}")
    if len(series) == 0:
        raise ValidationError("cannot resample an empty series")
    if new_step == series.step:
        return series
    span = series.step * len(series)
    n_out = -(-span // new_step)  # ceil
    times = series.start_time + new_step * np.arange(n_out, dtype=np.int64)
    return TimeSeries(series.start_time, int(new_step), sample_hold_at(series, times), series.unit)


def sample_hold_at(series: TimeSeries, times) -> np.ndarray:
    """Zero-order-held values of ``series`` at arbitrary timestamps."""
    times = np.asarray(times)
    idx = (times - series.start_time) // series.step
    idx = np.clip(idx, 0, len(series) - 1).astype(np.int64)
    return series.values[idx]


def slice_time(series: TimeSeries, t0: int, t1: int) -> TimeSeries:
    """Samples with t0 <= timestamp < t1, keeping grid alignment."""
    if t1 <= t0:
        raise ValidationError("slice needs t0 < t1")
    first = max(0, -(-(t0 - series.start_time) // series.step))
    last = min(len(series), -(-(t1 - series.start_time) // series.step))
    if last <= first:
        raise ValidationError(f"slice [{t0}, {t1}) is outside the series span")
    return TimeSeries(
        int(series.start_time + first * series.step),
        series.step,
        series.values[first:last],
        series.unit,
    )


# ---------------------------------------------------------------------------
# series persistence

_MAGIC = b"M3TS"
_BIN_VERSION = 1


def write_series(series: TimeSeries, path, fmt: str = "csv") -> None:
    """Persist a series as ``csv`` (default) or ``binary``."""
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# unit={series.unit.value}\n")
        # step is not recoverable from a single timestamp row
        buf.write(f"# step={series.step}\n")
        buf.write("timestamp,value\n")
        ts = series.timestamps()
        vals = series.values
        for i in range(len(series)):
            buf.write(f"{int(ts[i])},{float(vals[i])!r}\n")
        path.write_text(buf.getvalue())
    elif fmt == "binary":
        unit = series.unit.value.encode()
        header = struct.pack(
            "<4sHH q q Q", _MAGIC, _BIN_VERSION, len(unit),
            series.start_time, series.step, len(series),
        )
        path.write_bytes(header + unit + series.values.astype("<f8").tobytes())
    else:
        raise ValidationError(f"unknown series format: {fmt}")


def read_series(path, fmt: str = None) -> TimeSeries:
    """Read a series written by write_series; format sniffed when not given."""
    path = Path(path)
    if fmt is None:
        with _open_text(path, mode="rb") as fh:
            fmt = "binary" if fh.read(4) == _MAGIC else "csv"
    if fmt == "binary":
        with _open_text(path, mode="rb") as fh:
            raw = fh.read()
        head_fmt = "<4sHH q q Q"
        head_size = struct.calcsize(head_fmt)
        if len(raw) < head_size:
            raise ParseError("truncated binary series", path=path)
        magic, version, unit_len, start, step, count = struct.unpack_from(head_fmt, raw)
        if magic != _MAGIC:
            raise ParseError("not a binary series file", path=path)
        if version != _BIN_VERSION:
            raise ParseError(f"unsupported binary series version {version}", path=path)
        off = head_size
        unit = raw[off : off + unit_len].decode()
        off += unit_len
        expected = count * 8
        if len(raw) - off != expected:
            raise ParseError("binary series payload length mismatch", path=path)
        values = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
        return TimeSeries(int(start), int(step), values.astype(np.float64), Unit(unit))
    if fmt != "csv":
        raise ValidationError(f"unknown series format: {fmt}")
    unit = Unit.DIMENSIONLESS
    declared_step = None
    ts, vals = [], []
    with _open_text(path) as fh:
        lineno = 0
        for line in fh:
            lineno += 1
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("unit="):
                    try:
                        unit = Unit(body[5:].strip())
                    except ValueError as exc:
                        raise ParseError(f"unknown unit label {body[5:]!r}", path=path,
                                         line=lineno) from exc
                elif body.startswith("step="):
                    try:
                        declared_step = int(body[5:].strip())
                    except ValueError as exc:
                        raise ParseError(f"bad step declaration {body!r}", path=path,
                                         line=lineno) from exc
                continue
            if line == "timestamp,value":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 'timestamp,value', got {line!r}", path=path, line=lineno)
            try:
                ts.append(int(parts[0]))
                vals.append(float(parts[1]))
            except ValueError as exc:
                raise ParseError(f"bad sample row: {exc}", path=path, line=lineno) from exc
    start, step = _read_timestamp_grid(path, np.asarray(ts, dtype=np.int64))
    if declared_step is not None:
        if len(ts) > 1 and declared_step != step:
            raise ParseError(
                f"declared step {declared_step} does not match timestamps", path=path)
        step = declared_step
    return TimeSeries(start, step, np.asarray(vals), unit)
