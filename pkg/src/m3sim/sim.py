"""Trace-driven fleet simulator.

The engine replays a workload trace on a host fleet once, producing a
per-host utilization timeline, then evaluates every candidate power
model over that identical timeline. Changing the model list therefore
never changes scheduling, makespan, sample count, or failure events.

Scheduling: FIFO by submit time (ties broken by task id) with first-fit
placement by ascending host id. The queue is strict FIFO: when its head
does not fit anywhere, later tasks wait behind it.

Failures: per host, failure onsets follow an exponential inter-arrival
clock (rate per host-hour) and downtimes are exponential. A failed host
drops its tasks, which re-enter the queue and re-run from the beginning
(no checkpointing); the host draws idle power while down. Failure draws
come from per-host seeded streams, so the failure timeline depends only
on the scenario seed, never on scheduling or the model list. Forced
failure schedules are supported for deterministic tests.

Integration: cumulative series carry one more sample than the power
series. E[0] = 0 and E[i] = E[i-1] + P[i-1] * step / 3600 (watt-hours),
a left-rectangle sum that is exact for piecewise-constant demand;
CO2[i] = CO2[i-1] + (E[i] - E[i-1]) * intensity(t[i-1]) / 1000 (grams),
with intensity zero-order-held onto the energy grid.
"""

from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, SchedulingError, ValidationError
from .power import PowerModelSpec, power
from .traces import CarbonTrace, HostSpec, TimeSeries, Unit, WorkloadTrace, sample_hold_at

__all__ = [
    "FailureSpec",
    "SimScenario",
    "ModelResult",
    "SimResult",
    "run_scenario",
    "integrate_energy",
    "integrate_co2",
    "resolve_threads",
]

THREADS_ENV = "M3SIM_THREADS"

# event priorities at equal timestamps: completions land before failures,
# recoveries before new submissions
_FINISH, _FAIL, _RECOVER, _SUBMIT = 0, 1, 2, 3


@dataclass(frozen=True)
class FailureSpec:
    """Stochastic host failure model, or a forced schedule for tests.

    rate_per_host_per_hour may be 0 to disable stochastic failures
    (the degenerate limit behaves exactly like failures=None). When
    ``forced`` is given, only those (host_id, at_s, downtime_s) events
    fire and the stochastic clock is off.
    """

    rate_per_host_per_hour: float = 1.0 / 720.0  # one failure per host per 30 days
    downtime_mean_s: float = 7200.0
    forced: tuple | None = None

    def __post_init__(self):
        if self.rate_per_host_per_hour < 0:
            raise ValidationError("failure rate must be >= 0")
        if self.downtime_mean_s <= 0:
            raise ValidationError("mean downtime must be > 0")
        if self.forced is not None:
            forced = tuple((int(h), float(t), float(d)) for h, t, d in self.forced)
            for h, t, d in forced:
                if t < 0:
                    raise ValidationError("forced failure time must be >= 0")
                if d <= 0:
                    raise ValidationError("forced downtime must be > 0")
            object.__setattr__(self, "forced", forced)


@dataclass(frozen=True)
class SimScenario:
    """Everything one simulation run needs.

    model_ids defaults to "0", "1", ... in model order; pass archive ids
    when the models come from the built-in archive.
    """

    hosts: tuple
    workload: WorkloadTrace
    power_models: tuple
    sample_step: int = 60
    model_ids: tuple | None = None
    carbon: CarbonTrace | None = None
    failures: FailureSpec | None = None
    seed: int = 0

    def __post_init__(self):
        hosts = tuple(self.hosts)
        if not hosts:
            raise ValidationError("scenario needs at least one host")
        for h in hosts:
            if not isinstance(h, HostSpec):
                raise ValidationError(f"hosts must be HostSpec, got {type(h).__name__}")
        ids = [h.id for h in hosts]
        if len(set(ids)) != len(ids):
            raise ValidationError("host ids must be unique")
        hosts = tuple(sorted(hosts, key=lambda h: h.id))
        models = tuple(self.power_models)
        if not models:
            raise ValidationError("scenario needs at least one power model")
        for m in models:
            if not isinstance(m, PowerModelSpec):
                raise ValidationError(f"power_models must be PowerModelSpec, got {type(m).__name__}")
        if self.model_ids is None:
            mids = tuple(str(i) for i in range(len(models)))
        else:
            mids = tuple(str(m) for m in self.model_ids)
            if len(mids) != len(models):
                raise ValidationError("model_ids must match power_models in length")
            if len(set(mids)) != len(mids):
                raise ValidationError("model_ids must be unique")
        if self.sample_step <= 0:
            raise ValidationError("sample_step must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        biggest = max(h.core_count for h in hosts)
        for task in self.workload:
            if task.cpu_count > biggest:
                raise SchedulingError(
                    f"task {task.id} requests {task.cpu_count} cores, "
                    f"but the largest host has {biggest}"
                )
        if self.failures is not None and self.failures.forced is not None:
            known = {h.id for h in hosts}
            for h, _, _ in self.failures.forced:
                if h not in known:
                    raise ValidationError(f"forced failure names unknown host {h}")
        object.__setattr__(self, "hosts", hosts)
        object.__setattr__(self, "power_models", models)
        object.__setattr__(self, "model_ids", mids)
        object.__setattr__(self, "sample_step", int(self.sample_step))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class ModelResult:
    """Prediction series for one power model over the shared timeline."""

    model_id: str
    power: TimeSeries       # watts, n samples
    energy: TimeSeries      # cumulative watt-hours, n+1 samples
    co2: TimeSeries | None  # cumulative grams, n+1 samples (needs a carbon trace)


@dataclass(frozen=True)
class SimResult:
    model_results: tuple
    makespan: float            # first task start to last task completion, seconds
    completed_tasks: int
    rerun_count: int           # total task re-runs caused by failures
    busy_core_seconds: float   # exact utilization-weighted core-seconds served

    def model(self, model_id: str) -> ModelResult:
        for mr in self.model_results:
            if mr.model_id == model_id:
                return mr
        raise ValidationError(f"no result for model id {model_id}")


def resolve_threads(k: int, threads: int | None = None) -> int:
    """Worker count for per-model evaluation, capped by M3SIM_THREADS."""
    if threads is None:
        threads = min(k, os.cpu_count() or 1)
    if threads < 1:
        raise ValidationError("thread count must be >= 1")
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        threads = min(threads, cap)
    return max(1, min(threads, k))


class _Host:
    __slots__ = ("spec", "free", "up", "down_until", "running", "intervals")

    def __init__(self, spec):
        self.spec = spec
        self.free = spec.core_count
        self.up = True
        self.down_until = -math.inf
        self.running = {}   # task id -> (Task, start_time)
        self.intervals = [] # (t0, t1, weighted_cores) contributions, emitted on task exit


def _fragment_intervals(task, start, until=None):
    """Per-fragment (t0, t1, weighted_cores) spans, clipped to ``until``."""
    out = []
    t = start
    for dur, util in task.fragments:
        if dur <= 0:
            continue
        t0, t1 = t, t + dur
        t = t1
        if until is not None:
            if t0 >= until:
                break
            t1 = min(t1, until)
        w = util * task.cpu_count
        if w > 0 and t1 > t0:
            out.append((t0, t1, w))
    return out


def _simulate_timeline(scenario: SimScenario):
    """Run the event loop once; returns grid origin, per-host step functions,
    and the schedule facts every model shares."""
    hosts = [_Host(h) for h in scenario.hosts]
    by_id = {h.spec.id: h for h in hosts}
    tasks = scenario.workload.tasks
    t0 = min(t.submit_time for t in tasks)

    events = []  # (time, priority, seq, kind, payload)
    seq = 0

    def push(time, prio, kind, payload):
        nonlocal seq
        heapq.heappush(events, (time, prio, seq, kind, payload))
        seq += 1

    for task in tasks:
        push(float(task.submit_time), _SUBMIT, "submit", task)

    fail_rng = {}
    spec = scenario.failures
    stochastic = spec is not None and spec.forced is None and spec.rate_per_host_per_hour > 0
    if stochastic:
        mean_gap = 3600.0 / spec.rate_per_host_per_hour
        for idx, host in enumerate(hosts):
            rng = np.random.default_rng(np.random.SeedSequence([scenario.seed, idx]))
            fail_rng[host.spec.id] = rng
            push(t0 + rng.exponential(mean_gap), _FAIL, "fail", (host.spec.id, None))
    elif spec is not None and spec.forced is not None:
        for hid, at, downtime in spec.forced:
            push(float(at), _FAIL, "fail", (hid, downtime))

    ready = []  # (submit_time, task id, Task)
    completed = 0
    rerun_count = 0
    last_completion = float(t0)

    def schedule_pass(now):
        # strict FIFO: stop at the first queued task that fits nowhere
        while ready:
            _, _, task = ready[0]
            placed = False
            for host in hosts:  # ascending id order
                if host.up and host.free >= task.cpu_count:
                    heapq.heappop(ready)
                    host.free -= task.cpu_count
                    host.running[task.id] = (task, now)
                    push(now + task.total_duration, _FINISH, "finish",
                         (host.spec.id, task.id, now))
                    placed = True
                    break
            if not placed:
                return

    while events and completed < len(tasks):
        now = events[0][0]
        # drain every event at this instant, in priority order, then schedule once
        while events and events[0][0] == now:
            _, _, _, kind, payload = heapq.heappop(events)
            if kind == "finish":
                hid, tid, started = payload
                host = by_id[hid]
                entry = host.running.get(tid)
                if entry is None or entry[1] != started:
                    continue  # stale: this run of the task was killed by a failure
                task, start = host.running.pop(tid)
                host.intervals.extend(_fragment_intervals(task, start))
                host.free += task.cpu_count
                completed += 1
                last_completion = max(last_completion, now)
                if completed == len(tasks):
                    break
            elif kind == "fail":
                hid, downtime = payload
                host = by_id[hid]
                if stochastic:
                    downtime = fail_rng[hid].exponential(spec.downtime_mean_s)
                    # next onset ticks from the moment this repair completes
                    push(now + downtime + fail_rng[hid].exponential(mean_gap),
                         _FAIL, "fail", (hid, None))
                if not host.up:
                    # overlapping forced failure: extend the outage
                    host.down_until = max(host.down_until, now + downtime)
                    push(host.down_until, _RECOVER, "recover", hid)
                    continue
                host.up = False
                host.down_until = now + downtime
                for task, start in host.running.values():
                    host.intervals.extend(_fragment_intervals(task, start, until=now))
                    rerun_count += 1
                    heapq.heappush(ready, (task.submit_time, task.id, task))
                host.running.clear()
                host.free = host.spec.core_count
                push(host.down_until, _RECOVER, "recover", hid)
            elif kind == "recover":
                host = by_id[payload]
                if not host.up and now >= host.down_until:
                    host.up = True
            else:  # submit
                heapq.heappush(ready, (payload.submit_time, payload.id, payload))
        schedule_pass(now)

    if completed < len(tasks):  # pragma: no cover - loop always drains
        raise SchedulingError("simulation ended with unfinished tasks")

    busy = sum(w * (t1 - s) for h in hosts for s, t1, w in h.intervals)
    return t0, float(last_completion), [h.intervals for h in hosts], completed, rerun_count, busy


def _sample_step_function(intervals, grid):
    """Value at each grid point of the step function Σ intervals covering it."""
    if not intervals:
        return np.zeros(grid.size)
    starts = np.array([iv[0] for iv in intervals])
    ends = np.array([iv[1] for iv in intervals])
    weights = np.array([iv[2] for iv in intervals])
    times = np.concatenate([starts, ends])
    deltas = np.concatenate([weights, -weights])
    order = np.argsort(times, kind="stable")
    times = times[order]
    cum = np.cumsum(deltas[order])
    idx = np.searchsorted(times, grid, side="right") - 1
    out = np.where(idx >= 0, cum[np.clip(idx, 0, None)], 0.0)
    # clamp float dust from the +/- delta cancellation
    return np.maximum(out, 0.0)


def integrate_energy(power_series: TimeSeries) -> TimeSeries:
    """Cumulative energy in watt-hours; one sample longer than the input.

    E[i] = E[i-1] + P[i-1] * step / 3600, computed as a running watt sum
    scaled once at the end: integer-valued watt sums stay exact, so a
    constant draw integrates to its textbook total with no float dust.
    """
    if power_series.unit is not Unit.WATT:
        raise ValidationError(f"energy integration needs a watt series, got {power_series.unit.value}")
    sums = np.concatenate([[0.0], np.cumsum(power_series.values)])
    values = sums * power_series.step / 3600.0
    return TimeSeries(power_series.start_time, power_series.step, values, Unit.WATT_HOUR)


def integrate_co2(power_series: TimeSeries, carbon: CarbonTrace) -> TimeSeries:
    """Cumulative emitted grams, holding intensity constant across each step.

    CO2[i] = CO2[i-1] + E_step[i-1] * intensity(t[i-1]) / 1000 with
    E_step = P * step / 3600; accumulated as watt-times-intensity products
    and scaled once (1/3600000) so integer-valued cases come out exact.
    """
    if power_series.unit is not Unit.WATT:
        raise ValidationError(f"co2 integration needs a watt series, got {power_series.unit.value}")
    if len(power_series) == 0:
        return TimeSeries(power_series.start_time, power_series.step,
                          np.zeros(1), Unit.GRAM_CO2)
    left_edges = power_series.timestamps()
    if carbon.series.end_time <= int(left_edges[-1]):
        raise CoverageError(
            f"carbon trace {carbon.location} ends at {carbon.series.end_time}, "
            f"shorter than the simulation horizon {int(left_edges[-1])}"
        )
    intensity = sample_hold_at(carbon.series, left_edges)
    sums = np.concatenate([[0.0], np.cumsum(power_series.values * intensity)])
    values = sums * power_series.step / 3_600_000.0  # s -> h and g/kWh -> g/Wh
    return TimeSeries(power_series.start_time, power_series.step, values, Unit.GRAM_CO2)


def _evaluate_model(spec, grid_info, util_matrix, carbon):
    start, step = grid_info
    fleet_watts = power(spec, util_matrix).sum(axis=0)
    pw = TimeSeries(start, step, fleet_watts, Unit.WATT)
    en = integrate_energy(pw)
    co2 = integrate_co2(pw, carbon) if carbon is not None else None
    return pw, en, co2


def run_scenario(scenario: SimScenario, threads: int | None = None) -> SimResult:
    """Simulate once, then evaluate every model over the shared timeline.

    Models may be evaluated concurrently (capped by the M3SIM_THREADS
    environment variable); results are returned in model order and are
    identical to a sequential run.
    """
    t0, end, host_intervals, completed, reruns, busy = _simulate_timeline(scenario)
    step = scenario.sample_step
    n = max(1, math.ceil((end - t0) / step))
    grid = np.asarray(t0 + step * np.arange(n, dtype=np.int64), dtype=np.float64)

    cores = np.array([h.core_count for h in scenario.hosts], dtype=np.float64)
    util = np.empty((len(scenario.hosts), n))
    for row, intervals in enumerate(host_intervals):
        util[row] = np.clip(_sample_step_function(intervals, grid) / cores[row], 0.0, 1.0)

    k = len(scenario.power_models)
    workers = resolve_threads(k, threads)
    grid_info = (int(t0), step)
    if workers == 1:
        evaluated = [_evaluate_model(m, grid_info, util, scenario.carbon)
                     for m in scenario.power_models]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_evaluate_model, m, grid_info, util, scenario.carbon)
                       for m in scenario.power_models]
            evaluated = [f.result() for f in futures]

    results = tuple(
        ModelResult(model_id=mid, power=pw, energy=en, co2=co2)
        for mid, (pw, en, co2) in zip(scenario.model_ids, evaluated)
    )
    return SimResult(
        model_results=results,
        makespan=end - t0,
        completed_tasks=completed,
        rerun_count=reruns,
        busy_core_seconds=busy,
    )
