"""Sensing-matrix diagnostics as a scenario."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sensing import (DelaySchedule, MAX_RIP_COLUMNS, build_block_matrix, empirical_concentration,
                       incoherence_parameter, isotropy_estimate, rip_constant_exhaustive,
                       sample_delays_uniform)
from .config import ScenarioConfig
from .scenarios import sparse_truth


@dataclass(frozen=True)
class DiagnosticRow:
    what: str
    M: int
    statistic: str
    value: float


def _isotropy(config: ScenarioConfig, m: int) -> list[DiagnosticRow]:
    estimate = isotropy_estimate(m, config.N, config.trials, config.seed, config.workers)
    deviation = float(np.max(np.abs(estimate - np.eye(2 * config.N))))
    return [DiagnosticRow("isotropy", m, "max_abs_deviation", deviation),
            DiagnosticRow("isotropy", m, "draws", float(config.trials * m))]


def _incoherence(config: ScenarioConfig, m: int) -> list[DiagnosticRow]:
    worst = 0.0
    for k in range(config.trials):
        schedule = sample_delays_uniform(m, config.seed + k)
        worst = max(worst, incoherence_parameter(build_block_matrix(schedule, config.N)))
    with_zero = DelaySchedule(np.concatenate([[0.0], sample_delays_uniform(m, config.seed).values[1:]]))
    return [DiagnosticRow("incoherence", m, "max_mu", worst),
            DiagnosticRow("incoherence", m, "mu_with_zero_delay",
                          incoherence_parameter(build_block_matrix(with_zero, config.N)))]


def concentration_vector(n: int, s: int, seed: int) -> np.ndarray:
    """Unit-norm ``s``-sparse block vector of length ``2n``."""
    return sparse_truth(2 * n, s, seed, energies=False)


def _concentration(config: ScenarioConfig, m: int, eps: float = 0.5) -> list[DiagnosticRow]:
    x = concentration_vector(config.N, config.s, config.seed)
    est = empirical_concentration(x, m, config.trials, eps, config.seed, config.workers)
    return [DiagnosticRow("concentration", m, "deviation_frequency", est.probability),
            DiagnosticRow("concentration", m, "stderr", est.stderr),
            DiagnosticRow("concentration", m, "hoeffding_bound", est.hoeffding_bound)]


def _rip(config: ScenarioConfig, m: int) -> list[DiagnosticRow]:
    n = min(config.N, MAX_RIP_COLUMNS // 2)
    schedule = sample_delays_uniform(m, config.seed)
    a = build_block_matrix(schedule, n, normalized=True)
    s = min(config.s, 2 * n)
    return [DiagnosticRow("rip", m, f"delta_{s}_of_{2 * n}_columns",
                          rip_constant_exhaustive(a, s))]


_RUNNERS = {"isotropy": _isotropy, "incoherence": _incoherence,
            "concentration": _concentration, "rip": _rip}


def run_diagnostics(config: ScenarioConfig) -> list[DiagnosticRow]:
    rows = []
    for what in config.what:
        for m in config.M:
            rows.extend(_RUNNERS[what](config, m))
    return rows
