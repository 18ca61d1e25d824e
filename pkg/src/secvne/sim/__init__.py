"""Topology and workload generators, the event-driven runner and experiment driver."""
from .experiment import (
    CONFIG_SCHEMA,
    SUMMARY_SCHEMA,
    ConfigError,
    ExperimentConfig,
    csv_name,
    derive_seeds,
    load_config,
    run_experiment,
    run_one,
    summarize,
    write_outputs,
)
from .runner import COLUMNS, MetricsRecord, run
from .topology import GenerationError, SubstrateGenParams, gen_substrate, sample_graph, waxman_probabilities
from .workload import CONFIGS, Arrival, WorkloadParams, gen_workload

__all__ = [
    "CONFIGS", "COLUMNS", "CONFIG_SCHEMA", "SUMMARY_SCHEMA", "Arrival", "ConfigError", "ExperimentConfig",
    "GenerationError", "MetricsRecord", "SubstrateGenParams", "WorkloadParams", "csv_name", "derive_seeds",
    "gen_substrate", "gen_workload", "load_config", "run", "run_experiment", "run_one", "sample_graph",
    "summarize", "waxman_probabilities",
]
