"""Seeded synthetic inputs: workload traces and carbon intensity traces.

Everything here is a pure function of its arguments, so a fixed seed
reproduces the same trace byte for byte. Handy for demos, benchmarks,
and the test suite; real deployments load measured traces instead.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .traces import CarbonTrace, Task, TimeSeries, Unit, WorkloadTrace

__all__ = ["gen_workload", "gen_tiled_workload", "gen_carbon"]


def gen_workload(n_tasks: int, horizon_s: int, seed: int = 0, max_cores: int = 4,
                 max_fragments: int = 4) -> WorkloadTrace:
    """Random tasks with staggered submits and piecewise utilization."""
    if n_tasks < 1:
        raise ValidationError("n_tasks must be >= 1")
    if horizon_s < 100:
        raise ValidationError("horizon_s must be >= 100")
    rng = np.random.default_rng(seed)
    tasks = []
    width = len(str(n_tasks - 1))
    for i in range(n_tasks):
        submit = int(rng.integers(0, max(1, int(horizon_s * 0.8))))
        n_frag = int(rng.integers(1, max_fragments + 1))
        frags = []
        for _ in range(n_frag):
            dur = int(rng.integers(60, max(120, horizon_s // 20)))
            util = float(np.round(rng.uniform(0.05, 1.0), 4))
            frags.append((dur, util))
        tasks.append(
            Task(
                id=f"t{i:0{width}d}",
                submit_time=submit,
                cpu_count=int(rng.integers(1, max_cores + 1)),
                fragments=tuple(frags),
            )
        )
    return WorkloadTrace(tasks=tuple(tasks))


def gen_tiled_workload(n_hosts: int, cores_per_host: int, horizon_s: int, block_s: int,
                       seed: int = 0, fragments_per_task: int = 4) -> WorkloadTrace:
    """Contention-free tasks tiling every host back to back up to the horizon.

    Each host gets horizon/block full-width tasks submitted exactly when
    their predecessor ends, so the simulated span lands on the horizon
    to the second. Utilization varies per fragment.
    """
    if horizon_s % block_s != 0:
        raise ValidationError("block_s must divide horizon_s")
    if block_s % fragments_per_task != 0:
        raise ValidationError("fragments_per_task must divide block_s")
    rng = np.random.default_rng(seed)
    blocks = horizon_s // block_s
    frag_dur = block_s // fragments_per_task
    tasks = []
    width = len(str(n_hosts * blocks - 1))
    i = 0
    for j in range(blocks):
        for _ in range(n_hosts):
            frags = tuple(
                (frag_dur, float(np.round(rng.uniform(0.05, 1.0), 4)))
                for _ in range(fragments_per_task)
            )
            tasks.append(
                Task(id=f"t{i:0{width}d}", submit_time=j * block_s,
                     cpu_count=cores_per_host, fragments=frags)
            )
            i += 1
    return WorkloadTrace(tasks=tuple(tasks))


def gen_carbon(locations, start_time: int, days: int, step: int = 900,
               seed: int = 0) -> dict:
    """Diurnal sine intensity traces with per-location phase and noise."""
    locations = list(locations)
    if not locations:
        raise ValidationError("need at least one location")
    if days < 1:
        raise ValidationError("days must be >= 1")
    n = days * 86400 // step
    t = np.arange(n) * step
    out = {}
    for idx, loc in enumerate(locations):
        rng = np.random.default_rng([seed, idx])
        base = 80.0 + 60.0 * idx
        amp = 50.0 + 15.0 * idx
        phase = 2.0 * np.pi * idx / max(1, len(locations))
        values = base + amp * np.sin(2.0 * np.pi * t / 86400.0 + phase)
        values = values + rng.normal(0.0, 4.0, size=n)
        values = np.maximum(values, 1.0)
        series = TimeSeries(int(start_time), int(step), values, Unit.GRAM_CO2_PER_KWH)
        out[str(loc)] = CarbonTrace(location=str(loc), series=series)
    return out
