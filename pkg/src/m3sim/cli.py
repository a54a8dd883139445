"""Command line interface.

Subcommands cover each pipeline stage plus an end-to-end runner:

    m3sim simulate   --config scenario.json --out simout/
    m3sim analyze    --dir simout/ --metric power --window 10 --out multimodel.json
    m3sim metamodel  --multimodel multimodel.json --agg median --out meta.csv
    m3sim score      --metric mape --real reference.csv --sim meta.csv
    m3sim migrate    --carbon-dir carbon/ --granularity 15m,1h --energy energy.csv
                     --report migration.csv
    m3sim experiment --config experiment.json
    m3sim gen workload|carbon ...

Exit codes: 0 on success, 1 when inputs fail validation, 2 on runtime
errors. The M3SIM_THREADS environment variable caps how many power
models are evaluated concurrently.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .accuracy import score
from .errors import M3simError, ValidationError
from .experiment import (
    ExperimentConfig,
    build_scenario,
    read_bundle,
    run_experiment,
    write_bundle,
    _align_intensities,
)
from .metamodel import MetaAgg, MetaSpec, derive_meta, export_meta
from .migration import GRANULARITIES, assess_locations, migrate_at_granularity
from .multimodel import Metric, WindowSpec, assemble
from .sim import run_scenario
from .synth import gen_carbon, gen_workload
from .traces import Unit, load_carbon_dir, read_series, write_series

_ALIAS = {Metric.POWER: "power", Metric.ENERGY: "energy", Metric.CO2: "co2"}
_SPANS = {"15m": 900, "1h": 3600, "4h": 14400, "8h": 28800, "24h": 86400}


def _out_path(arg) -> Path:
    path = Path(arg)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_granularities(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part in _SPANS:
            out.append(_SPANS[part])
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise ValidationError(
                    f"bad granularity {part!r} (use 15m/1h/4h/8h/24h or seconds)"
                ) from None
    if not out:
        raise ValidationError("no granularities given")
    return out


def _cmd_simulate(args):
    cfg_path = Path(args.config)
    try:
        raw = json.loads(cfg_path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {cfg_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{cfg_path}: not valid JSON: {exc}") from exc
    scenario = build_scenario(raw, base_dir=cfg_path.parent)
    result = run_scenario(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for mr in result.model_results:
        write_series(mr.power, out / f"{mr.model_id}.power.csv", fmt=args.format)
        write_series(mr.energy, out / f"{mr.model_id}.energy.csv", fmt=args.format)
        if mr.co2 is not None:
            write_series(mr.co2, out / f"{mr.model_id}.co2.csv", fmt=args.format)
    summary = {
        "models": list(scenario.model_ids),
        "makespan_s": result.makespan,
        "completed_tasks": result.completed_tasks,
        "rerun_count": result.rerun_count,
        "samples": len(result.model_results[0].power),
    }
    (out / "simulation.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"simulated {len(scenario.model_ids)} models over "
          f"{summary['samples']} samples -> {out}")
    return 0


def _cmd_analyze(args):
    metric = Metric.parse(args.metric)
    alias = _ALIAS[metric]
    directory = Path(args.dir)
    suffix = f".{alias}.csv"
    files = sorted(p for p in directory.glob(f"*{suffix}"))
    if not files:
        raise ValidationError(f"{directory}: no *{suffix} series files")
    members = [(p.name[: -len(suffix)], read_series(p)) for p in files]
    multi = assemble(members, metric, WindowSpec(size=args.window))
    write_bundle(multi, _out_path(args.out))
    print(f"assembled {len(multi)} members x {len(multi.members[0][1])} windows -> {args.out}")
    return 0


def _cmd_metamodel(args):
    multi = read_bundle(args.multimodel)
    quorum = None if args.quorum == "all" else int(args.quorum)
    meta = derive_meta(multi, MetaSpec(agg=MetaAgg(args.agg), quorum=quorum))
    fmt = "binary" if args.out.endswith(".bin") else "csv"
    export_meta(meta, _out_path(args.out), fmt=fmt)
    print(f"meta-model ({meta.spec.agg.value}, quorum {meta.spec.quorum}) "
          f"over {meta.member_count} members -> {args.out}")
    return 0


def _cmd_score(args):
    real = read_series(args.real)
    sim = read_series(args.sim)
    report = score(args.metric, real, sim)
    print(f"{report.metric}: {report.value:.6g} (n={report.n})")
    return 0


def _cmd_migrate(args):
    traces = load_carbon_dir(args.carbon_dir)
    energy = read_series(args.energy)
    if energy.unit is not Unit.WATT_HOUR:
        raise ValidationError(f"--energy must be a cumulative watt_hour series, "
                              f"got unit {energy.unit.value}")
    grans = _parse_granularities(args.granularity)
    statics = assess_locations(energy, traces)
    aligned = _align_intensities(traces, energy)
    plans = [migrate_at_granularity(aligned, g, energy=energy) for g in grans]
    import csv as _csv

    with _out_path(args.report).open("w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["row_type", "name", "granularity_s", "migrations", "total_co2_g"])
        for loc in statics:
            w.writerow(["static", loc.location, "", "", repr(loc.total_g)])
        for plan in plans:
            w.writerow(["plan", "", plan.granularity_s, plan.migrations,
                        repr(plan.total_co2)])
    best = statics[0]
    print(f"best static: {best.location} at {best.total_g:.1f} g")
    for plan in plans:
        print(f"plan {plan.granularity_s}s: {plan.migrations} migrations, "
              f"{plan.total_co2:.1f} g")
    return 0


def _cmd_experiment(args):
    config = ExperimentConfig.load(args.config)
    if args.out is not None:
        config = ExperimentConfig(
            scenario=config.scenario,
            metric=config.metric,
            window=config.window,
            meta=config.meta,
            output_dir=Path(args.out),
            ground_truth=config.ground_truth,
            migration=config.migration,
            export_format=config.export_format,
            base_dir=config.base_dir,
        )
    echo = json.loads(Path(args.config).read_text())
    result = run_experiment(config, echo=echo)
    t = result.timings
    ratio = t["analysis_s"] / t["simulation_s"] if t["simulation_s"] > 0 else float("inf")
    print(f"simulation: {t['simulation_s']:.3f} s")
    print(f"analysis:   {t['analysis_s']:.3f} s ({ratio:.2f}x of simulation)")
    print(f"total:      {t['total_s']:.3f} s")
    print(f"artifacts in {result.output_dir}: {', '.join(result.artifacts)}")
    return 0


def _cmd_gen(args):
    if args.kind == "workload":
        trace = gen_workload(args.tasks, args.horizon, seed=args.seed,
                             max_cores=args.max_cores)
        import csv as _csv

        with _out_path(args.out).open("w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["id", "submit_time", "cpu_count", "duration", "cpu_usage"])
            for task in trace:
                for dur, util in task.fragments:
                    w.writerow([task.id, task.submit_time, task.cpu_count, dur, repr(util)])
        print(f"{len(trace)} tasks -> {args.out}")
        return 0
    # carbon
    locations = [s.strip() for s in args.locations.split(",") if s.strip()]
    traces = gen_carbon(locations, args.start, args.days, step=args.step, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    for loc in sorted(traces):
        series = traces[loc].series
        with (out_dir / f"{loc}.csv").open("w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["timestamp", "carbon_intensity"])
            for ts, v in zip(series.timestamps(), series.values):
                w.writerow([int(ts), repr(float(v))])
    print(f"{len(traces)} locations x {len(next(iter(traces.values())).series)} samples "
          f"-> {out_dir}")
    return 0


def _build_parser():
    p = argparse.ArgumentParser(prog="m3sim", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"m3sim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario, write per-model series")
    s.add_argument("--config", required=True, help="scenario JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--format", choices=["csv", "binary"], default="csv")
    s.set_defaults(fn=_cmd_simulate)

    s = sub.add_parser("analyze", help="window per-model series into a multi-model bundle")
    s.add_argument("--dir", required=True, help="directory of <id>.<metric>.csv files")
    s.add_argument("--metric", default="power", help="power, energy, or co2")
    s.add_argument("--window", type=int, default=1, help="window size in samples")
    s.add_argument("--out", required=True, help="bundle JSON path")
    s.set_defaults(fn=_cmd_analyze)

    s = sub.add_parser("metamodel", help="aggregate a bundle into a meta-model series")
    s.add_argument("--multimodel", required=True, help="bundle JSON from analyze")
    s.add_argument("--agg", choices=["mean", "median"], default="mean")
    s.add_argument("--quorum", default="all", help="'all' or a member count")
    s.add_argument("--out", required=True, help="series path (.bin for binary)")
    s.set_defaults(fn=_cmd_metamodel)

    s = sub.add_parser("score", help="accuracy of a simulated series vs a reference")
    s.add_argument("--metric", choices=["mape", "rmse", "mae"], default="mape")
    s.add_argument("--real", required=True, help="reference series file")
    s.add_argument("--sim", required=True, help="simulated series file")
    s.set_defaults(fn=_cmd_score)

    s = sub.add_parser("migrate", help="greedy carbon-aware migration plans")
    s.add_argument("--carbon-dir", required=True, help="directory of <location>.csv traces")
    s.add_argument("--granularity", default="15m,1h,4h,8h,24h",
                   help="comma list: 15m/1h/4h/8h/24h or seconds")
    s.add_argument("--energy", required=True, help="cumulative energy series file")
    s.add_argument("--report", required=True, help="report CSV path")
    s.set_defaults(fn=_cmd_migrate)

    s = sub.add_parser("experiment", help="full pipeline from one config")
    s.add_argument("--config", required=True, help="experiment JSON")
    s.add_argument("--out", default=None, help="override output_dir")
    s.set_defaults(fn=_cmd_experiment)

    s = sub.add_parser("gen", help="generate synthetic inputs")
    gsub = s.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("workload", help="random workload trace CSV")
    g.add_argument("--tasks", type=int, default=100)
    g.add_argument("--horizon", type=int, default=86400, help="submit horizon, seconds")
    g.add_argument("--max-cores", type=int, default=4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen, kind="workload")
    g = gsub.add_parser("carbon", help="diurnal carbon intensity CSVs, one per location")
    g.add_argument("--locations", required=True, help="comma list of location codes")
    g.add_argument("--start", type=int, default=0, help="epoch seconds of first sample")
    g.add_argument("--days", type=int, default=7)
    g.add_argument("--step", type=int, default=900)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(fn=_cmd_gen, kind="carbon")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (M3simError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
