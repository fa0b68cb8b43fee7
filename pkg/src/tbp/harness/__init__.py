"""Monte-Carlo experiment harness: sweeps, CSV output and plots."""
from .config import (
    AlgoSpec,
    ExperimentConfig,
    GridPoint,
    parse_algos,
    parse_int_grid,
    parse_snr,
    parse_theta_grid,
    read_config_file,
    theta_sigma,
)
from .plot import PLOT_KINDS, AmplitudeTable, amplitude_instance, emit_plot
from .runner import (
    CSV_HEADER,
    SweepRow,
    SweepTable,
    TrialRecord,
    aggregate,
    read_csv,
    run_sweep,
    run_trial,
    trial_seed,
    write_csv,
)

__all__ = [
    "AlgoSpec",
    "ExperimentConfig",
    "GridPoint",
    "parse_algos",
    "parse_int_grid",
    "parse_snr",
    "parse_theta_grid",
    "read_config_file",
    "theta_sigma",
    "PLOT_KINDS",
    "AmplitudeTable",
    "amplitude_instance",
    "emit_plot",
    "CSV_HEADER",
    "SweepRow",
    "SweepTable",
    "TrialRecord",
    "aggregate",
    "read_csv",
    "run_sweep",
    "run_trial",
    "trial_seed",
    "write_csv",
]
