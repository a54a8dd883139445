"""End-to-end experiment runs: simulate, analyze, score, plan, report.

An experiment config is a JSON document (paths resolve relative to the
config file) with this shape:

    {
      "scenario": {
        "hosts": [{"cores": 16, "count": 4}],
        "workload": "workload.csv",
        "sample_step": 30,
        "models": "E2",                  // tag, or a list of archive ids
        "carbon": {"path": "de.csv"},    //   and/or inline model objects
        "failures": {"rate_per_host_per_hour": 0.0014, "downtime_mean_s": 7200},
        "seed": 42
      },
      "analysis": {"metric": "power", "window": 10, "agg": "mean", "quorum": "all"},
      "ground_truth": "reference.csv",   // optional, sampled on the sim grid
      "migration": {"carbon_dir": "carbon/", "granularities_s": [900, 3600]},
      "output_dir": "out",
      "export_format": "csv"
    }

Artifacts land in output_dir: one <id>.<metric>.csv per model, the
multi-model bundle, the meta-model export, SVG charts, accuracy and
migration reports when configured, and a deterministic manifest.json.
Identical config and seed reproduce every artifact byte for byte; the
timing breakdown goes to stdout only for that reason. A failing step
removes whatever partial outputs it had written.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .accuracy import mae, mape, rmse
from .errors import ValidationError
from .metamodel import MetaAgg, MetaModel, MetaSpec, derive_meta, export_meta
from .migration import GRANULARITIES, assess_locations, migrate_at_granularity
from .multimodel import Metric, MultiModel, WindowSpec, assemble, window
from .plots import plot_timeseries, plot_totals
from .power import PowerModelSpec, builtin_archive
from .sim import FailureSpec, SimScenario, run_scenario
from .traces import (
    HostSpec,
    TimeSeries,
    load_carbon,
    load_carbon_dir,
    load_workload,
    read_series,
    sample_hold_at,
    write_series,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "build_scenario",
    "run_experiment",
    "write_bundle",
    "read_bundle",
]

_METRIC_ALIAS = {Metric.POWER: "power", Metric.ENERGY: "energy", Metric.CO2: "co2"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: dict
    metric: Metric
    window: WindowSpec
    meta: MetaSpec
    output_dir: Path
    ground_truth: Path | None = None
    migration: dict | None = None
    export_format: str = "csv"
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=Path(".")) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ValidationError("experiment config must be a JSON object")
        base_dir = Path(base_dir)
        if "scenario" not in raw:
            raise ValidationError("experiment config needs a 'scenario' section")
        scenario = raw["scenario"]
        if isinstance(scenario, str):
            sc_path = base_dir / scenario
            try:
                scenario = json.loads(sc_path.read_text())
            except OSError as exc:
                raise ValidationError(f"cannot read scenario file {sc_path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{sc_path}: not valid JSON: {exc}") from exc
        analysis = raw.get("analysis", {})
        metric = Metric.parse(analysis.get("metric", "power"))
        window = WindowSpec(size=int(analysis.get("window", 1)))
        quorum = analysis.get("quorum", "all")
        quorum = None if quorum in (None, "all") else int(quorum)
        meta = MetaSpec(agg=MetaAgg(analysis.get("agg", "mean")), quorum=quorum)
        if "output_dir" not in raw:
            raise ValidationError("experiment config needs 'output_dir'")
        ground = raw.get("ground_truth")
        migration = raw.get("migration")
        if migration is not None:
            if "carbon_dir" not in migration:
                raise ValidationError("migration config needs 'carbon_dir'")
            migration = {
                "carbon_dir": str(migration["carbon_dir"]),
                "granularities_s": [int(g) for g in
                                    migration.get("granularities_s", GRANULARITIES)],
            }
        fmt = raw.get("export_format", "csv")
        if fmt not in ("csv", "binary"):
            raise ValidationError(f"export_format must be csv or binary, got {fmt!r}")
        return cls(
            scenario=scenario,
            metric=metric,
            window=window,
            meta=meta,
            output_dir=base_dir / str(raw["output_dir"]),
            ground_truth=(base_dir / str(ground)) if ground else None,
            migration=migration,
            export_format=fmt,
            base_dir=base_dir,
        )


@dataclass(frozen=True)
class ExperimentResult:
    output_dir: Path
    artifacts: tuple          # artifact basenames, sorted
    timings: dict             # simulation_s, analysis_s, total_s
    sim: object               # SimResult
    meta: MetaModel
    accuracy: tuple | None    # rows of (series, n, mape, rmse, mae)
    migration: tuple | None   # (static LocationResults, MigrationPlans)


def _build_models(spec, archive):
    """Resolve the scenario's 'models' entry to (ids, specs)."""
    if isinstance(spec, str):
        pairs = archive.select(spec)
        return [mid for mid, _ in pairs], [s for _, s in pairs]
    if not isinstance(spec, list) or not spec:
        raise ValidationError("'models' must be a tag string or a non-empty list")
    ids, specs = [], []
    for i, entry in enumerate(spec):
        if isinstance(entry, str):
            ids.append(entry)
            specs.append(archive.get(entry))
        elif isinstance(entry, dict):
            entry = dict(entry)
            ids.append(str(entry.pop("id", i)))
            try:
                specs.append(PowerModelSpec(**entry))
            except TypeError as exc:
                raise ValidationError(f"bad inline model at index {i}: {exc}") from exc
        else:
            raise ValidationError(f"bad model entry at index {i}: {entry!r}")
    return ids, specs


def build_scenario(raw: dict, base_dir=Path(".")) -> SimScenario:
    """Turn a scenario config dict into a validated SimScenario."""
    if not isinstance(raw, dict):
        raise ValidationError("scenario config must be a JSON object")
    base_dir = Path(base_dir)
    for key in ("hosts", "workload", "models"):
        if key not in raw:
            raise ValidationError(f"scenario config needs '{key}'")
    hosts = []
    hid = 0
    for entry in raw["hosts"]:
        if not isinstance(entry, dict) or "cores" not in entry:
            raise ValidationError(f"bad host entry: {entry!r}")
        for _ in range(int(entry.get("count", 1))):
            hosts.append(
                HostSpec(
                    id=hid,
                    core_count=int(entry["cores"]),
                    core_speed_mhz=entry.get("core_speed_mhz"),
                    memory_mib=entry.get("memory_mib"),
                )
            )
            hid += 1
    workload = load_workload(base_dir / str(raw["workload"]))
    ids, specs = _build_models(raw["models"], builtin_archive())
    carbon = None
    if raw.get("carbon") is not None:
        c = raw["carbon"]
        if not isinstance(c, dict) or "path" not in c:
            raise ValidationError("scenario 'carbon' needs a 'path'")
        carbon = load_carbon(base_dir / str(c["path"]), location=c.get("location"))
    failures = None
    if raw.get("failures") is not None:
        f = raw["failures"]
        kwargs = {}
        if "rate_per_host_per_hour" in f:
            kwargs["rate_per_host_per_hour"] = float(f["rate_per_host_per_hour"])
        if "downtime_mean_s" in f:
            kwargs["downtime_mean_s"] = float(f["downtime_mean_s"])
        if "forced" in f:
            kwargs["forced"] = tuple((int(h), float(t), float(d)) for h, t, d in f["forced"])
        failures = FailureSpec(**kwargs)
    return SimScenario(
        hosts=tuple(hosts),
        workload=workload,
        power_models=tuple(specs),
        model_ids=tuple(ids),
        sample_step=int(raw.get("sample_step", 60)),
        carbon=carbon,
        failures=failures,
        seed=int(raw.get("seed", 0)),
    )


def write_bundle(multi: MultiModel, path) -> None:
    """Persist a MultiModel as JSON; floats round-trip exactly."""
    doc = {
        "metric": multi.metric.value,
        "window": {"size": multi.window.size, "agg": multi.window.agg.value},
        "start_time": multi.start_time,
        "step": multi.step,
        "unit": multi.unit.value,
        "members": [{"id": mid, "values": [float(v) for v in s.values]}
                    for mid, s in multi.members],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_bundle(path) -> MultiModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    try:
        members = tuple(
            (m["id"], TimeSeries(int(doc["start_time"]), int(doc["step"]),
                                 np.asarray(m["values"], dtype=np.float64), doc["unit"]))
            for m in doc["members"]
        )
        return MultiModel(
            metric=Metric(doc["metric"]),
            window=WindowSpec(size=int(doc["window"]["size"])),
            members=members,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed multi-model bundle: {exc}") from exc


def _align_intensities(traces: dict, energy: TimeSeries) -> dict:
    """Zero-order-hold every location onto the energy grid's left edges."""
    edges = energy.timestamps()[:-1]
    out = {}
    for loc in sorted(traces):
        series = traces[loc].series
        if series.end_time <= int(edges[-1]):
            raise ValidationError(
                f"carbon trace {loc} ends at {series.end_time}, before the "
                f"energy horizon {int(edges[-1])}"
            )
        out[loc] = TimeSeries(energy.start_time, energy.step,
                              sample_hold_at(series, edges), series.unit)
    return out


def _score_rows(reference: TimeSeries, multi: MultiModel, meta: MetaModel):
    rows = []
    for mid, series in list(multi.members) + [("meta", meta.series)]:
        try:
            m = mape(reference, series)
        except ValidationError:
            m = None  # zero in the reference; MAPE undefined
        n = min(len(reference), len(series))
        rows.append((mid, n, m, rmse(reference, series), mae(reference, series)))
    return tuple(rows)


def run_experiment(config: ExperimentConfig, echo=None) -> ExperimentResult:
    """Run the full pipeline; see the module docstring for the artifacts."""
    out_dir = Path(config.output_dir)
    created_dir = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, writer) -> Path:
        p = out_dir / name
        writer(p)
        written.append(p)
        return p

    t_start = time.perf_counter()
    try:
        # --- simulation phase: build inputs, run, persist per-model series
        scenario = build_scenario(config.scenario, config.base_dir)
        sim = run_scenario(scenario)
        alias = _METRIC_ALIAS[config.metric]
        for mr in sim.model_results:
            if config.metric is Metric.POWER:
                series = mr.power
            elif config.metric is Metric.ENERGY:
                series = mr.energy
            else:
                if mr.co2 is None:
                    raise ValidationError(
                        "analysis metric is co2 but the scenario has no carbon trace"
                    )
                series = mr.co2
            emit(f"{mr.model_id}.{alias}.csv", lambda p, s=series: write_series(s, p))
        t_sim = time.perf_counter()

        # --- analysis phase: multi-model, meta-model, scores, plans, charts
        multi = assemble(sim, config.metric, config.window)
        emit("multimodel.json", lambda p: write_bundle(multi, p))
        meta = derive_meta(multi, config.meta)
        meta_name = "meta.csv" if config.export_format == "csv" else "meta.bin"
        emit(meta_name, lambda p: export_meta(meta, p, fmt=config.export_format))

        reference = None
        accuracy_rows = None
        if config.ground_truth is not None:
            raw_ref = read_series(config.ground_truth)
            if raw_ref.start_time != multi.start_time or raw_ref.step != scenario.sample_step:
                raise ValidationError(
                    f"ground truth grid (start {raw_ref.start_time}, step {raw_ref.step}) "
                    f"does not match the simulation grid "
                    f"(start {multi.start_time}, step {scenario.sample_step})"
                )
            reference = window(raw_ref, config.window)
            accuracy_rows = _score_rows(reference, multi, meta)

            def write_accuracy(p):
                with p.open("w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["series", "n", "mape_pct", "rmse", "mae"])
                    for mid, n, m, r, a in accuracy_rows:
                        w.writerow([mid, n, "" if m is None else repr(m), repr(r), repr(a)])

            emit("accuracy.csv", write_accuracy)

        migration_result = None
        if config.migration is not None:
            traces = load_carbon_dir(config.base_dir / config.migration["carbon_dir"])
            energy_multi = assemble(sim, Metric.ENERGY, WindowSpec(size=1))
            meta_energy = derive_meta(energy_multi, config.meta).series
            statics = assess_locations(meta_energy, traces)
            aligned = _align_intensities(traces, meta_energy)
            plans = tuple(
                migrate_at_granularity(aligned, g, energy=meta_energy)
                for g in config.migration["granularities_s"]
            )
            migration_result = (tuple(statics), plans)

            def write_migration(p):
                with p.open("w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["row_type", "name", "granularity_s", "migrations",
                                "total_co2_g"])
                    for loc in statics:
                        w.writerow(["static", loc.location, "", "", repr(loc.total_g)])
                    for plan in plans:
                        w.writerow(["plan", "", plan.granularity_s, plan.migrations,
                                    repr(plan.total_co2)])

            emit("migration.csv", write_migration)

        emit("timeseries.svg",
             lambda p: p.write_text(plot_timeseries(multi, meta, reference)))
        if config.metric.cumulative:
            emit("totals.svg", lambda p: p.write_text(plot_totals(multi, meta)))

        manifest = {
            "version": __version__,
            "metric": config.metric.value,
            "window": {"size": config.window.size, "agg": config.window.agg.value},
            "meta": {"agg": meta.spec.agg.value, "quorum": meta.spec.quorum},
            "seed": scenario.seed,
            "models": list(scenario.model_ids),
            "hosts": len(scenario.hosts),
            "tasks": len(scenario.workload),
            "completed_tasks": sim.completed_tasks,
            "rerun_count": sim.rerun_count,
            "makespan_s": sim.makespan,
            "samples": len(sim.model_results[0].power),
            "windowed_samples": len(multi.members[0][1]),
            "artifacts": sorted([p.name for p in written] + ["manifest.json"]),
            "config_echo": echo,
        }
        emit("manifest.json",
             lambda p: p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n"))
        t_end = time.perf_counter()
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir:
            try:
                out_dir.rmdir()
            except OSError:
                pass
        raise

    timings = {
        "simulation_s": t_sim - t_start,
        "analysis_s": t_end - t_sim,
        "total_s": t_end - t_start,
    }
    return ExperimentResult(
        output_dir=out_dir,
        artifacts=tuple(sorted(p.name for p in written)),
        timings=timings,
        sim=sim,
        meta=meta,
        accuracy=accuracy_rows,
        migration=migration_result,
    )
