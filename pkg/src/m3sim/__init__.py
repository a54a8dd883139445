"""m3sim: multi-model datacenter power simulation and analysis.

One scenario, many power models: the simulator replays a workload trace
once, evaluates every candidate model over the identical timeline, and
the analysis layer windows, aggregates, scores, and plans carbon-aware
migrations from the results.
"""

__version__ = "0.1.0"

from .accuracy import AccuracyReport, mae, mape, rmse, score
from .errors import (
    CoverageError,
    M3simError,
    ParseError,
    SchedulingError,
    ValidationError,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    build_scenario,
    read_bundle,
    run_experiment,
    write_bundle,
)
from .metamodel import MetaAgg, MetaModel, MetaSpec, derive_meta, export_meta
from .migration import (
    GRANULARITIES,
    LocationResult,
    MigrationPlan,
    assess_locations,
    migrate_at_granularity,
    migration_counts,
)
from .multimodel import Metric, MultiModel, WindowSpec, assemble, totals, window
from .plots import plot_timeseries, plot_totals
from .power import ModelArchive, ModelKind, PowerModelSpec, builtin_archive, power
from .sim import (
    FailureSpec,
    ModelResult,
    SimResult,
    SimScenario,
    integrate_co2,
    integrate_energy,
    resolve_threads,
    run_scenario,
)
from .synth import gen_carbon, gen_tiled_workload, gen_workload
from .traces import (
    CarbonTrace,
    HostSpec,
    Task,
    TimeSeries,
    Unit,
    WorkloadTrace,
    load_carbon,
    load_carbon_dir,
    load_workload,
    read_series,
    resample_hold,
    sample_hold_at,
    slice_time,
    write_series,
)

__all__ = [
    "__version__",
    "AccuracyReport", "mae", "mape", "rmse", "score",
    "M3simError", "ValidationError", "ParseError", "SchedulingError", "CoverageError",
    "ExperimentConfig", "ExperimentResult", "build_scenario", "run_experiment",
    "read_bundle", "write_bundle",
    "MetaAgg", "MetaModel", "MetaSpec", "derive_meta", "export_meta",
    "GRANULARITIES", "LocationResult", "MigrationPlan",
    "assess_locations", "migrate_at_granularity", "migration_counts",
    "Metric", "MultiModel", "WindowSpec", "assemble", "totals", "window",
    "plot_timeseries", "plot_totals",
    "ModelArchive", "ModelKind", "PowerModelSpec", "builtin_archive", "power",
    "FailureSpec", "ModelResult", "SimResult", "SimScenario",
    "integrate_co2", "integrate_energy", "resolve_threads", "run_scenario",
    "gen_carbon", "gen_tiled_workload", "gen_workload",
    "CarbonTrace", "HostSpec", "Task", "TimeSeries", "Unit", "WorkloadTrace",
    "load_carbon", "load_carbon_dir", "load_workload",
    "read_series", "resample_hold", "sample_hold_at", "slice_time", "write_series",
]
