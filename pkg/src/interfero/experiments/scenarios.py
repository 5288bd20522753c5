"""Scenario pipelines and the Monte Carlo driver.

Every scenario builds an ``Instance``: ground truth, noise-free measurements
from the physical forward model for the largest M, and a sensing matrix for
any prefix of the delay schedule.  The driver then adds noise, solves and
scores each (M, SNR) pair.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..delay import OpticalParams, frft_delay
from ..errors import ConfigError
from ..grid import (BasisSpec, CoefficientVector, Field, Grid, analyze_field,
                    flipped_gaussian_mode, synthesize_field)
from ..interferometer import (SampleArm, analytic_interferogram, analytic_interferogram_2d,
                              field_interferogram, localization_matrix, localization_measurements,
                              noise_sigma, normalize_measurements, oct_sample_coefficients)
from ..postprocess import extract_d_coefficients, extract_layers
from ..sensing import (MatrixKind, SensingMatrix, build_2d_cosine_matrix, build_block_matrix,
                       build_cosine_matrix, build_oct_dictionary, nyquist_schedule,
                       sample_delays_uniform, signal_power)
from ..solvers import (RecoveryProblem, RecoveryResult, basis_pursuit, dantzig_selector,
                       default_lambda, ft_baseline, lasso, least_squares, recovery_error)
from .config import ScenarioConfig

TRUTH_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    M: int
    snr_db: float | None
    seed: int
    scaled_error: float
    residual: float
    runtime_ms: float | None
    status: str

    def __post_init__(self):
        if not self.scaled_error >= 0:
            raise ValueError("scaled error must be nonnegative")

    @property
    def sort_key(self):
        snr = math.inf if self.snr_db is None else self.snr_db
        return self.M, snr, self.seed


@dataclass(frozen=True)
class CoefficientRecord:
    M: int
    snr_db: float | None
    seed: int
    x_true: np.ndarray
    x_hat: np.ndarray


@dataclass
class ResultTable:
    scenario: str
    rows: list[ResultRow] = field(default_factory=list)
    coefficients: list[CoefficientRecord] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def sort(self) -> "ResultTable":
        self.rows.sort(key=lambda r: r.sort_key)
        self.coefficients.sort(key=lambda c: ResultRow(
            self.scenario, c.M, c.snr_db, c.seed, 0.0, 0.0, None, "").sort_key)
        return self

    def errors(self, m: int, snr_db: float | None) -> np.ndarray:
        return np.array([r.scaled_error for r in self.rows
                         if r.M == m and r.snr_db == snr_db])

    def summary(self) -> list[tuple[int, float | None, float, float, int]]:
        """Per (M, SNR): mean and median scaled error and the run count."""
        keys = sorted({(r.M, r.snr_db) for r in self.rows},
                      key=lambda k: (k[0], math.inf if k[1] is None else k[1]))
        out = []
        for m, snr in keys:
            errs = self.errors(m, snr)
            out.append((m, snr, float(errs.mean()), float(np.median(errs)), errs.size))
        return out


@dataclass
class Instance:
    """One randomised draw of a scenario.

    ``truth`` is what the solver is asked to recover (``y = A truth``);
    ``reference`` is what the error is scored against after ``postprocess``.
    """

    truth: np.ndarray
    y_clean: np.ndarray
    raw: SensingMatrix
    reference: np.ndarray | None = None
    postprocess: Callable[[np.ndarray], np.ndarray] | None = None

    def matrix(self, m: int) -> SensingMatrix:
        """Normalised matrix for the first ``m`` delays."""
        raw = self.raw
        return replace(raw, entries=raw.entries[:m], schedule=raw.schedule.prefix(m)).normalize()

    def measurements(self, m: int) -> np.ndarray:
        """Noise-free measurements on the scale of ``matrix(m)``."""
        return self.y_clean[:m] * self.matrix(m).scale

    def target(self) -> np.ndarray:
        return self.truth if self.reference is None else self.reference


def sparse_truth(n: int, s: int, seed: int, energies: bool = True) -> np.ndarray:
    """``s`` nonzeros on a uniformly random support with values U[0.2, 1],
    normalised to unit energy (``sum x = 1``) or unit l2 norm."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, TRUTH_STREAM]))
    x = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    x[support] = rng.uniform(0.2, 1.0, s)
    return x / (x.sum() if energies else np.linalg.norm(x))


def _field_grid(config: ScenarioConfig) -> Grid:
    half = config.grid_halfwidth * config.sigma
    return Grid.linspace(-half, half, config.grid_points)


def _flipped_input(config: ScenarioConfig, grid: Grid) -> Field:
    weights = config.weights or (1.0,) * len(config.modes)
    values = sum(w * flipped_gaussian_mode(k, config.sigma, grid).values
                 for w, k in zip(weights, config.modes))
    field_in = Field(grid, values)
    return field_in.scaled(1 / field_in.norm())


def _modal_instance(config: ScenarioConfig, run_seed: int, realization: str | None) -> Instance:
    n = config.N
    basis = BasisSpec.hermite_gaussian(n, config.sigma)
    if config.solver == "ft":
        if config.M != (2 * n,):
            raise ConfigError(f"field 'M': the ft baseline needs exactly M = 2N = {2 * n}")
        schedule = nyquist_schedule(n)
    else:
        schedule = sample_delays_uniform(config.max_m, run_seed)
    field_in = None
    if config.scenario == "modal-experimental-approx":
        field_in = _flipped_input(config, _field_grid(config))
        c = analyze_field(field_in, basis)
        truth = np.abs(c.values) ** 2
    else:
        truth = sparse_truth(n, config.s, config.seed)
        c = CoefficientVector(basis, np.sqrt(truth))
    if realization is None:
        ig = analytic_interferogram(c, c, schedule.values)
    else:
        grid = _field_grid(config)
        params = OpticalParams.matched(config.sigma, config.wavelength)
        if field_in is None:
            field_in = synthesize_field(c, grid)
        ig = field_interferogram(field_in, lambda a: frft_delay(a, grid, params, realization),
                                 SampleArm.identity(), basis, schedule.values)
    return Instance(truth, normalize_measurements(ig), build_cosine_matrix(schedule, n))


def _source_energies(n: int, width: float | None) -> np.ndarray:
    if width is None:
        e = np.ones(n)
    else:
        e = np.exp(-0.5 * ((np.arange(1, n + 1) - n / 2) / width) ** 2)
    return e / e.sum()


def oct_depth_grid(config: ScenarioConfig) -> np.ndarray:
    """Candidate round-trip times spaced by half the shortest period ``pi / N``."""
    count = config.depths or (config.N if config.scenario == "oct-dense" else 100)
    return np.arange(count) * np.pi / config.N


def _oct_instance(config: ScenarioConfig, run_seed: int) -> Instance:
    n = config.N
    dense = config.scenario == "oct-dense"
    basis = BasisSpec.harmonics(n)
    omegas = basis.rates
    depth_grid = oct_depth_grid(config)
    count = depth_grid.size
    energies = _source_energies(n, config.source_width)
    c = CoefficientVector(basis, np.sqrt(energies))
    if dense:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, TRUTH_STREAM]))
        r = rng.uniform(0.2, 1.0, count)
        r /= np.linalg.norm(r)
    else:
        r = sparse_truth(count, config.s, config.seed, energies=False)
    present = np.flatnonzero(r)
    d = oct_sample_coefficients(c, SampleArm.layered(r[present], depth_grid[present]))
    schedule = sample_delays_uniform(config.max_m, run_seed)
    y = normalize_measurements(analytic_interferogram(c, d, schedule.values))
    if not dense:
        return Instance(r, y, build_oct_dictionary(energies, omegas, schedule, depth_grid))
    g = np.conj(c.values) * d.values

    def to_profile(x_hat):
        profile = np.zeros(count)
        d_hat = extract_d_coefficients(x_hat, c)
        for layer in extract_layers(d_hat, c, omegas, depth_grid):
            profile[int(np.argmin(np.abs(depth_grid - layer.round_trip)))] = layer.reflectivity
        return profile

    return Instance(np.concatenate([g.real, g.imag]), y, build_block_matrix(schedule, n),
                    reference=r, postprocess=to_profile)


def _two_d_instance(config: ScenarioConfig, run_seed: int) -> Instance:
    nx, ny = config.shape
    if nx * ny != config.N:
        raise ConfigError(f"field 'N': must equal the mode count {nx * ny} of shape {nx}x{ny}")
    basis = BasisSpec.hermite_gaussian_2d(nx, ny, config.sigma, config.sigma)
    truth = sparse_truth(config.N, config.s, config.seed)
    c = CoefficientVector(basis, np.sqrt(truth))
    schedule = sample_delays_uniform(config.max_m, run_seed, pairs=True)
    y = normalize_measurements(analytic_interferogram_2d(c, schedule.values))
    return Instance(truth, y, build_2d_cosine_matrix(schedule, nx, ny))


def _localization_instance(config: ScenarioConfig, run_seed: int) -> Instance:
    w1, w2 = config.carriers
    a1, a2 = config.amplitudes
    d1, d2 = config.paths
    schedule = sample_delays_uniform(config.max_m, run_seed)
    # delays span one beat period of the two carriers
    times = schedule.values / abs(w1 - w2)
    y, truth = localization_measurements(a1, a2, w1, w2, d1, d2, config.light_speed, times)
    raw = SensingMatrix(localization_matrix(w1, w2, times), MatrixKind.BLOCK, False, schedule)
    return Instance(truth, y, raw)


def build_instance(config: ScenarioConfig, run_seed: int) -> Instance:
    kind = config.scenario
    if kind == "modal-ideal":
        return _modal_instance(config, run_seed, None)
    if kind in ("modal-slm", "modal-experimental-approx"):
        return _modal_instance(config, run_seed, "cascade")
    if kind in ("oct-dense", "oct-sparse"):
        return _oct_instance(config, run_seed)
    if kind == "two-d":
        return _two_d_instance(config, run_seed)
    if kind == "localization":
        return _localization_instance(config, run_seed)
    raise ConfigError(f"field 'scenario': {kind} has no measurement pipeline")


def resolve_lambda(config: ScenarioConfig, k: int) -> float:
    if config.lam == "default":
        return default_lambda(k)
    if config.lam == "universal":
        return math.sqrt(2 * math.log(k))
    return float(config.lam)


def resolve_solver(config: ScenarioConfig, snr_db: float | None) -> str:
    if config.solver != "auto":
        return config.solver
    if config.scenario in ("oct-dense", "localization"):
        return "ls"
    return "bp" if snr_db is None else "dantzig"


def solve(config: ScenarioConfig, name: str, matrix: SensingMatrix, y: np.ndarray,
          sigma: float) -> RecoveryResult:
    a = matrix.entries
    if name == "ft":
        if config.scenario not in ("modal-ideal", "modal-slm", "modal-experimental-approx"):
            raise ConfigError("field 'solver': the ft baseline applies to modal scenarios only")
        result = ft_baseline(y / matrix.scale, a.shape[1], matrix.schedule.values)
        return replace(result, residual=float(np.linalg.norm(a @ result.x_hat - y)))
    problem = RecoveryProblem(a, y, sigma, config.nonneg)
    if name == "bp":
        return basis_pursuit(problem)
    if name == "lasso":
        return lasso(problem, resolve_lambda(config, a.shape[1]))
    if name == "dantzig":
        return dantzig_selector(problem, resolve_lambda(config, a.shape[1]))
    if name == "ls":
        return least_squares(problem)
    raise ConfigError(f"field 'solver': unknown solver {name}")


def _run_once(config: ScenarioConfig, run_seed: int):
    inst = build_instance(config, run_seed)
    z = np.random.default_rng(np.random.SeedSequence([run_seed, NOISE_STREAM])) \
        .standard_normal(config.max_m)
    rows, records = [], []
    for m in config.M:
        mat = inst.matrix(m)
        y_m = inst.y_clean[:m] * mat.scale
        power = signal_power(mat, inst.truth)
        for snr in config.snr_db:
            sigma = noise_sigma(power, snr)
            y = y_m + sigma * z[:m]
            name = resolve_solver(config, snr)
            start = time.perf_counter()
            result = solve(config, name, mat, y, sigma)
            elapsed = (time.perf_counter() - start) * 1e3
            x_hat = result.x_hat if inst.postprocess is None else inst.postprocess(result.x_hat)
            rows.append(ResultRow(config.scenario, m, snr, run_seed,
                                  recovery_error(inst.target(), x_hat), result.residual,
                                  elapsed if config.record_timing else None,
                                  result.status.value))
            records.append(CoefficientRecord(m, snr, run_seed, inst.target(), x_hat))
    return rows, records


def _execute(config: ScenarioConfig, seeds: list[int], keep_coefficients: bool) -> ResultTable:
    table = ResultTable(config.scenario)
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_run_once, [config] * len(seeds), seeds))
    else:
        parts = [_run_once(config, s) for s in seeds]
    for rows, records in parts:
        table.rows.extend(rows)
        if keep_coefficients:
            table.coefficients.extend(records)
    return table.sort()


def run_scenario(config: ScenarioConfig) -> ResultTable:
    """A single run at ``config.seed`` over every listed M and SNR."""
    if config.scenario == "diagnostics":
        from .diagnostics import run_diagnostics
        table = ResultTable(config.scenario)
        table.extras["diagnostics"] = run_diagnostics(config)
        return table
    return _execute(config, [config.seed], keep_coefficients=True)


def monte_carlo_sweep(config: ScenarioConfig, keep_coefficients: bool = False) -> ResultTable:
    """``config.runs`` runs with seeds ``seed + i``; the ground truth is fixed
    by ``seed`` and the delay schedule and noise are redrawn per run."""
    if config.scenario == "diagnostics":
        return run_scenario(config)
    seeds = [config.seed + i for i in range(config.runs)]
    return _execute(config, seeds, keep_coefficients)
