from .config import (
    RunConfig,
    SweepConfig,
    build_objective,
    bundled_configs,
    initial_point,
    load_config,
    resolve_config,
)
from .experiment import (
    probe_report,
    read_trace_csv,
    reference_solution,
    run_experiment,
    stepsize_comparison,
    tune_monotone,
    write_trace_csv,
)
