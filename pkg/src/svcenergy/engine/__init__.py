from .compare import (
    ComparisonError,
    ScenarioAggregate,
    aggregate_scenario,
    build_comparison,
    compare,
    render_summary_csv,
    write_comparison,
)
from .results import Evaluation, RunResult, evaluate
from .run import (
    Archive,
    ExperimentOutcome,
    OutputConflictError,
    RunError,
    RunFailure,
    execute_run,
    load_archive,
    run_experiment,
)
from .spec import ExperimentSpec, PlannedRun, SpecError, load_spec, parse_spec, plan_runs
from .stats import CI_LEVEL, CI_METHOD, Aggregate, aggregate
