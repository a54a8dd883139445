"""Acceptance gate: one test per release criterion.

Each test prints a PASS/FAIL line tagged with its criterion number, so
`pytest -v -s tests/test_acceptance.py` reads as a checklist. The
criteria pin the load-bearing behavior: formula oracles, the model
dominance chain, windowing and aggregation laws, exact integration
cases, failure-cost ordering, migration planning, scale and overhead
budgets, byte-level determinism, and the accuracy metrics.
"""

from __future__ import annotations

import csv
import json
import math
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from m3sim import (
    CarbonTrace,
    ExperimentConfig,
    FailureSpec,
    HostSpec,
    MetaAgg,
    MetaSpec,
    Metric,
    MultiModel,
    PowerModelSpec,
    SimScenario,
    Task,
    TimeSeries,
    Unit,
    WindowSpec,
    WorkloadTrace,
    assemble,
    builtin_archive,
    derive_meta,
    gen_carbon,
    gen_tiled_workload,
    gen_workload,
    mae,
    mape,
    migrate_at_granularity,
    power,
    rmse,
    run_experiment,
    run_scenario,
    totals,
    window,
)

ARCHIVE = builtin_archive()


@contextmanager
def criterion(num: int, name: str):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {num:2d} FAIL  {name}")
        raise
    print(f"[acceptance] criterion {num:2d} PASS  {name}")


def anchored(kind, **kw):
    return PowerModelSpec(kind=kind, p_idle=32, p_max=180, **kw)


# hand-derived with the math module, independent of the package formulas
_U = (0.0, 0.25, 0.5, 0.75, 1.0)
_FORMULA_TABLE = {
    anchored("sqrt"): (32.0, 106.0, 136.65180361560903, 160.1717597600969, 180.0),
    anchored("linear"): (32.0, 69.0, 106.0, 143.0, 180.0),
    anchored("square"): (32.0, 41.25, 69.0, 115.25, 180.0),
    anchored("cubic"): (32.0, 34.3125, 50.5, 94.4375, 180.0),
    anchored("mse", r=10.0): (32.0, 105.99985885620117, 179.85546875,
                              245.66559982299805, 180.0),
    anchored("mse", r=0.7): (32.0, 49.91848703911526, 88.89531341247618,
                             132.99464230980203, 180.0),
    anchored("asymptotic", alpha=0.85): (32.0, 69.35602754100245, 101.90732839785566,
                                         130.8782006608746, 157.180977575653),
    anchored("asymptotic", alpha=0.3): (32.0, 92.33973257047622, 129.02320539002042,
                                        155.4257101018315, 177.36012449230333),
    anchored("asymptotic_dvfs", alpha=0.85): (32.0, 34.50411767328514, 51.3700034285707,
                                              92.1701654605633, 157.180977575653),
    anchored("asymptotic_dvfs", alpha=1.9): (32.0, 33.762307204465294, 45.961730573696826,
                                             77.95335250899385, 136.28246397130886),
}
_REACHES_MAX = ("sqrt", "linear", "square", "cubic", "mse")


def test_criterion_01_power_formula_oracles():
    with criterion(1, "power formulas match the hand-derived table"):
        for spec, expected in _FORMULA_TABLE.items():
            for u, want in zip(_U, expected):
                got = power(spec, u)
                assert got == pytest.approx(want, rel=1e-9), (spec.kind, u)
            assert power(spec, 0.0) == 32.0  # idle endpoint exact
            if spec.kind.value in _REACHES_MAX:
                assert power(spec, 1.0) == 180.0


def test_criterion_02_dominance_and_sqrt_excess():
    with criterion(2, "dominance chain and sqrt-model overestimation"):
        u = np.linspace(0.0, 1.0, 10_001)
        curves = [power(anchored(k), u) for k in ("sqrt", "linear", "square", "cubic")]
        for upper, lower in zip(curves, curves[1:]):
            assert np.all(upper >= lower)

        # constant mid-utilization fleet, all eight mid-tier models
        pairs = ARCHIVE.select("E2")
        tasks = tuple(
            Task(id=f"t{i}", submit_time=0, cpu_count=4, fragments=((7200, 0.5),))
            for i in range(2)
        )
        scenario = SimScenario(
            hosts=(HostSpec(id=0, core_count=4), HostSpec(id=1, core_count=4)),
            workload=WorkloadTrace(tasks=tasks),
            power_models=tuple(s for _, s in pairs),
            model_ids=tuple(mid for mid, _ in pairs),
        )
        mm = assemble(run_scenario(scenario), Metric.ENERGY, WindowSpec(size=1))
        by_id = dict(totals(mm))
        sqrt_total = by_id.pop("M1")
        mean_rest = sum(by_id.values()) / len(by_id)
        assert sqrt_total >= 1.25 * mean_rest  # observed ratio ~1.86


def test_criterion_03_windowing_law():
    with criterion(3, "windowed length is ceil(n/m); means preserved"):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            n = int(rng.integers(1, 400))
            m = int(rng.integers(1, 50))
            s = TimeSeries(0, 60, rng.uniform(-10, 10, n), Unit.WATT)
            out = window(s, WindowSpec(size=m))
            assert len(out) == math.ceil(n / m)
            assert out.step == 60 * m
        s = TimeSeries(0, 60, rng.uniform(0, 1, 17), Unit.WATT)
        assert window(s, WindowSpec(size=1)) is s
        for m in (2, 4, 5, 10, 20):
            vals = rng.uniform(0, 500, 100)  # every m divides 100
            out = window(TimeSeries(0, 60, vals, Unit.WATT), WindowSpec(size=m))
            assert out.values.mean() == pytest.approx(vals.mean(), rel=1e-12)


def test_criterion_04_meta_model_error_reduction():
    with criterion(4, "median meta-model beats the mean member error"):
        n = 20_160  # two weeks at one-minute sampling
        t = np.arange(n) * 60.0
        truth = 1000.0 + 300.0 * np.sin(2.0 * np.pi * t / 86_400.0)
        biases = (0.40, 0.05, -0.05, 0.05, -0.05, 0.05, -0.05, -0.08)
        rng = np.random.default_rng(1234)
        members = tuple(
            (f"m{j}", TimeSeries(0, 60,
                                 truth * (1.0 + b) + truth * 0.01 * rng.standard_normal(n),
                                 Unit.WATT))
            for j, b in enumerate(biases)
        )
        mm = MultiModel(metric=Metric.POWER, window=WindowSpec(size=1), members=members)
        meta = derive_meta(mm, MetaSpec(agg=MetaAgg.MEDIAN))
        reference = TimeSeries(0, 60, truth, Unit.WATT)
        member_mapes = [mape(reference, s) for _, s in members]
        meta_mape = mape(reference, meta.series)
        assert meta_mape <= 0.6 * float(np.mean(member_mapes))


def test_criterion_05_exact_integration():
    with criterion(5, "analytic energy and emission totals are exact"):
        host = HostSpec(id=0, core_count=1)
        task = Task(id="a", submit_time=0, cpu_count=1, fragments=((3600, 1.0),))
        carbon = CarbonTrace("X", TimeSeries(0, 1800, np.array([100.0, 300.0]),
                                             Unit.GRAM_CO2_PER_KWH))
        scenario = SimScenario(hosts=(host,), workload=WorkloadTrace(tasks=(task,)),
                               power_models=(anchored("linear"),), sample_step=60,
                               carbon=carbon)
        mr = run_scenario(scenario).model_results[0]
        assert np.all(mr.power.values == 180.0)
        assert mr.energy.values[-1] == 180.0  # exactly, by construction
        assert mr.co2.values[-1] == 36.0      # 90 Wh at 100 + 90 Wh at 300

        rng = np.random.default_rng(42)
        for trial in range(100):
            trace = gen_workload(int(rng.integers(1, 12)), 86_400,
                                 seed=int(rng.integers(0, 2**31)))
            hosts = tuple(HostSpec(id=i, core_count=4)
                          for i in range(int(rng.integers(1, 4))))
            carbon = CarbonTrace("Y", TimeSeries(
                0, 900, rng.uniform(20, 600, 7 * 96), Unit.GRAM_CO2_PER_KWH))
            scn = SimScenario(hosts=hosts, workload=trace,
                              power_models=(anchored("sqrt"),),
                              sample_step=300, carbon=carbon)
            res = run_scenario(scn).model_results[0]
            assert np.all(np.diff(res.energy.values) >= 0.0)
            assert np.all(np.diff(res.co2.values) >= 0.0)


def _co2_total(tasks, failures):
    carbon = CarbonTrace("Z", TimeSeries(0, 900, np.full(96, 250.0),
                                         Unit.GRAM_CO2_PER_KWH))
    scn = SimScenario(hosts=(HostSpec(id=0, core_count=1),),
                      workload=WorkloadTrace(tasks=tasks),
                      power_models=(anchored("linear"),),
                      sample_step=60, carbon=carbon, failures=failures)
    return float(run_scenario(scn).model_results[0].co2.values[-1])


def test_criterion_06_failure_cost_ordering():
    with criterion(6, "late failures cost long jobs more than short ones"):
        long_jobs = (Task(id="big", submit_time=0, cpu_count=1,
                          fragments=((36_000, 1.0),)),)
        short_jobs = tuple(Task(id=f"s{i}", submit_time=0, cpu_count=1,
                                fragments=((3600, 1.0),)) for i in range(10))
        crash = FailureSpec(forced=((0, 34_200.0, 600.0),))

        long_base = _co2_total(long_jobs, None)
        long_failed = _co2_total(long_jobs, crash)
        short_base = _co2_total(short_jobs, None)
        short_failed = _co2_total(short_jobs, crash)

        assert long_failed > long_base
        delta_long = (long_failed - long_base) / long_base
        delta_short = (short_failed - short_base) / short_base
        assert delta_long > delta_short


def test_criterion_07_migration_properties():
    with criterion(7, "greedy relocation plans behave as specified"):
        def intensity(values, step=900):
            return TimeSeries(0, step, np.asarray(values, dtype=np.float64),
                              Unit.GRAM_CO2_PER_KWH)

        # (a) hourly-alternating leader: 23 switches, beats both statics
        hours = np.repeat(np.arange(24), 4)
        a = np.where(hours % 2 == 0, 100.0, 300.0)
        b = np.where(hours % 2 == 0, 300.0, 100.0)
        traces = {"A": intensity(a), "B": intensity(b)}
        plan = migrate_at_granularity(traces, 3600)
        statics = {loc: migrate_at_granularity({loc: traces[loc]}, 3600).total_co2
                   for loc in traces}
        assert plan.migrations == 23
        assert plan.total_co2 < min(statics.values())

        # (b) the finest plan never loses to any static placement
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(8, 96))
            k = int(rng.integers(2, 5))
            locs = {f"L{i}": intensity(rng.uniform(10, 800, n)) for i in range(k)}
            finest = migrate_at_granularity(locs, 900).total_co2
            for loc in locs:
                assert finest <= migrate_at_granularity(
                    {loc: locs[loc]}, 900).total_co2 + 1e-9

        # (c) a day-long holding period can lose to the best static
        trap = {"A": intensity(np.concatenate([[10.0], np.full(95, 1000.0)])),
                "B": intensity(np.full(96, 100.0))}
        day_plan = migrate_at_granularity(trap, 86_400)
        best_static = migrate_at_granularity({"B": trap["B"]}, 86_400).total_co2
        assert day_plan.total_co2 > best_static

        # (d) constant intensities never trigger a move
        flat = {"A": intensity(np.full(96, 120.0)), "B": intensity(np.full(96, 90.0))}
        for g in (900, 3600, 14_400, 28_800, 86_400):
            assert migrate_at_granularity(flat, g).migrations == 0


def _scale_config(root: Path) -> ExperimentConfig:
    trace = gen_tiled_workload(4, 8, 6_048_000, 3600, seed=11)
    with (root / "workload.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "submit_time", "cpu_count", "duration", "cpu_usage"])
        for task in trace:
            for dur, util in task.fragments:
                w.writerow([task.id, task.submit_time, task.cpu_count, dur, repr(util)])
    return ExperimentConfig.from_dict({
        "scenario": {
            "hosts": [{"cores": 8, "count": 4}],
            "workload": "workload.csv",
            "models": "E2",
            "sample_step": 30,
            "seed": 11,
        },
        "analysis": {"metric": "power", "window": 10, "agg": "mean"},
        "output_dir": "out",
    }, base_dir=root)


def test_criterion_08_scale_and_overhead(tmp_path):
    with criterion(8, "eight models over 201,600 samples within budget"):
        result = run_experiment(_scale_config(tmp_path))
        assert len(result.sim.model_results) == 8
        assert len(result.sim.model_results[0].power) == 201_600
        t = result.timings
        assert t["analysis_s"] < t["simulation_s"]
        assert t["total_s"] < 300.0


def test_criterion_09_deterministic_pipeline(tmp_path, monkeypatch):
    with criterion(9, "identical config reproduces byte-identical outputs"):
        (tmp_path / "workload.csv").write_text(
            "id,submit_time,cpu_count,duration,cpu_usage\n"
            "a,0,2,3600,0.8\n"
            "b,600,1,1800,0.3\n"
            "b,600,1,1800,0.9\n"
        )
        carbon_dir = tmp_path / "carbon"
        carbon_dir.mkdir()
        for loc, trace in gen_carbon(["DE", "NL"], 0, 1, seed=3).items():
            rows = ["timestamp,carbon_intensity"]
            for ts, v in zip(trace.series.timestamps(), trace.series.values):
                rows.append(f"{int(ts)},{float(v)!r}")
            (carbon_dir / f"{loc}.csv").write_text("\n".join(rows) + "\n")
        (tmp_path / "experiment.json").write_text(json.dumps({
            "scenario": {
                "hosts": [{"cores": 2, "count": 2}],
                "workload": "workload.csv",
                "models": ["M1", "M3", "M13", "M16"],
                "sample_step": 60,
                "failures": {"rate_per_host_per_hour": 2.0, "downtime_mean_s": 600},
                "seed": 21,
            },
            "analysis": {"metric": "energy", "window": 5, "agg": "median"},
            "migration": {"carbon_dir": "carbon", "granularities_s": [900, 3600]},
            "output_dir": "out",
        }))

        def run(name: str, threads: str) -> dict:
            monkeypatch.setenv("M3SIM_THREADS", threads)
            cfg = ExperimentConfig.load(tmp_path / "experiment.json")
            cfg = ExperimentConfig(
                scenario=cfg.scenario, metric=cfg.metric, window=cfg.window,
                meta=cfg.meta, output_dir=tmp_path / name,
                ground_truth=cfg.ground_truth, migration=cfg.migration,
                export_format=cfg.export_format, base_dir=cfg.base_dir)
            result = run_experiment(cfg)
            out = {p.name: p.read_bytes() for p in result.output_dir.iterdir()}
            assert sorted(out) == list(result.artifacts)
            return out

        first = run("out_t1_a", "1")
        assert run("out_t1_b", "1") == first
        assert run("out_t8", "8") == first


def test_criterion_10_accuracy_oracles():
    with criterion(10, "error metrics match their oracle vectors"):
        assert mape([1.0, 2.0, 4.0], [0.9, 2.2, 4.4]) == pytest.approx(10.0, rel=1e-12)
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5), rel=1e-12)
        assert mae([0.0, 0.0], [3.0, 4.0]) == 3.5
        assert rmse([5.0], [8.0]) == mae([5.0], [8.0]) == 3.0

        rng = np.random.default_rng(2024)
        for _ in range(100):
            n = int(rng.integers(1, 200))
            r = rng.uniform(0.5, 1000, n)
            s = rng.uniform(0.0, 1000, n)
            c = float(rng.uniform(1e-6, 1e6))
            assert mape(r, s) == pytest.approx(mape(r * c, s * c), rel=1e-9)
