"""Scenario configuration, Monte Carlo driver and result output."""

from .config import ScenarioConfig, config_from_dict, config_to_dict, load_config
from .outputs import RESULT_HEADER, emit_outputs
from .scenarios import (Instance, ResultRow, ResultTable, build_instance, monte_carlo_sweep,
                        run_scenario, sparse_truth)

__all__ = [
    "Instance", "RESULT_HEADER", "ResultRow", "ResultTable", "ScenarioConfig", "build_instance",
    "config_from_dict", "config_to_dict", "emit_outputs", "load_config", "monte_carlo_sweep",
    "run_scenario", "sparse_truth",
]
