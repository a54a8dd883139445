"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from m3sim import (
    HostSpec,
    PowerModelSpec,
    SimScenario,
    Task,
    TimeSeries,
    Unit,
    WorkloadTrace,
)

LINEAR = PowerModelSpec(kind="linear", p_idle=32, p_max=180)
SQRT = PowerModelSpec(kind="sqrt", p_idle=32, p_max=180)


def series(values, start=0, step=60, unit=Unit.DIMENSIONLESS):
    return TimeSeries(start, step, np.asarray(values, dtype=np.float64), unit)


def one_task_scenario(duration=3600, util=1.0, step=60, models=(LINEAR,), **kw):
    host = HostSpec(id=0, core_count=1)
    task = Task(id="a", submit_time=0, cpu_count=1, fragments=((duration, util),))
    return SimScenario(
        hosts=(host,),
        workload=WorkloadTrace(tasks=(task,)),
        power_models=tuple(models),
        sample_step=step,
        **kw,
    )


@pytest.fixture
def workload_csv(tmp_path):
    """Two tasks; the second has two fragment rows grouped by id."""
    p = tmp_path / "workload.csv"
    p.write_text(
        "id,submit_time,cpu_count,duration,cpu_usage\n"
        "a,0,1,3600,1.0\n"
        "b,100,2,600,0.5\n"
        "b,100,2,1200,0.25\n"
    )
    return p


@pytest.fixture
def carbon_csv(tmp_path):
    """96 rows at 900 s covering 24 h."""
    p = tmp_path / "DE.csv"
    rows = ["timestamp,carbon_intensity"]
    for i in range(96):
        rows.append(f"{i * 900},{100 + (i % 4) * 10}")
    p.write_text("\n".join(rows) + "\n")
    return p
