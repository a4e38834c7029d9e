"""Python access to the pbvf core: environments, runs, landscapes, CSV files."""

from ._core import (
    ConfigError,
    Error,
    InputError,
    NumericError,
    ProtocolError,
    RunConfig,
    avg_metric,
    final_metric,
    landscape_dump,
    lqr_riccati,
    make_env,
    pearson,
    read_curve_csv,
    read_landscape_csv,
    read_oracle_csv,
    read_summary_csv,
    resolve_config,
    run_experiment,
    run_oracle,
    run_training,
)

__all__ = [
    "ConfigError",
    "Error",
    "InputError",
    "NumericError",
    "ProtocolError",
    "RunConfig",
    "avg_metric",
    "final_metric",
    "landscape_dump",
    "lqr_riccati",
    "make_env",
    "pearson",
    "read_curve_csv",
    "read_landscape_csv",
    "read_oracle_csv",
    "read_summary_csv",
    "resolve_config",
    "run_experiment",
    "run_oracle",
    "run_training",
]
