"""Delay schedules, interferometric sensing matrices and recoverability
diagnostics (isotropy, incoherence, concentration, restricted isometry)."""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CombinatorialBlowup, DimensionMismatch

TWO_PI = 2 * np.pi


class Provenance(enum.Enum):
    UNIFORM = "uniform"
    NYQUIST = "nyquist"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class DelaySchedule:
    """Delays in ``[0, 2 pi)``; shape (M,) or (M, 2) for paired orders."""

    values: np.ndarray
    provenance: Provenance = Provenance.EXPLICIT
    seed: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim not in (1, 2) or len(values) < 1:
            raise ValueError("a schedule needs at least one delay")
        if np.any(values < 0) or np.any(values >= TWO_PI):
            raise ValueError("delays must lie in [0, 2 pi)")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def prefix(self, m: int) -> "DelaySchedule":
        """The first ``m`` delays; seeded schedules nest across sizes."""
        return replace(self, values=self.values[:m])


def _near_singular(values: np.ndarray, margin: float) -> np.ndarray:
    r = np.mod(values, np.pi)
    return np.minimum(r, np.pi - r) < margin


def sample_delays_uniform(m: int, seed: int, avoid_singular: bool = False,
                          pairs: bool = False, margin: float = 1e-3) -> DelaySchedule:
    """``m`` i.i.d. draws from U[0, 2 pi).

    With ``avoid_singular`` each draw within ``margin`` of a multiple of pi is
    replaced by a fresh draw, as needed by kernel-realised frFT arms.
    """
    if m < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(seed)
    shape = (m, 2) if pairs else (m,)
    values = rng.uniform(0, TWO_PI, shape)
    if avoid_singular:
        bad = _near_singular(values, margin)
        while bad.any():
            values[bad] = rng.uniform(0, TWO_PI, int(bad.sum()))
            bad = _near_singular(values, margin)
    return DelaySchedule(values, Provenance.UNIFORM, seed)


def nyquist_schedule(n: int) -> DelaySchedule:
    """``2n`` equally spaced delays over one period."""
    if n < 1:
        raise ValueError("N must be at least 1")
    return DelaySchedule(TWO_PI * np.arange(2 * n) / (2 * n), Provenance.NYQUIST)


class MatrixKind(enum.Enum):
    BLOCK = "block"
    COSINE = "cosine"
    OCT = "oct"
    TWO_D = "two-d"


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    entries: np.ndarray
    kind: MatrixKind
    normalized: bool
    schedule: DelaySchedule
    scale: float = 1.0
    source_energies: np.ndarray | None = None
    omegas: np.ndarray | None = None
    depths: np.ndarray | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != len(self.schedule):
            raise DimensionMismatch("one matrix row per scheduled delay is required")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __matmul__(self, x):
        return self.entries @ x

    def normalize(self) -> "SensingMatrix":
        """Rescale so that ``E[A^T A]`` has a unit diagonal."""
        if self.normalized:
            return self
        m = self.shape[0]
        factor = math.sqrt(2 / m)
        if self.kind is MatrixKind.OCT:
            factor /= math.sqrt(float(np.sum(self.source_energies ** 2)))
        return replace(self, entries=self.entries * factor, normalized=True,
                       scale=self.scale * factor)

    def to_csv(self, path) -> Path:
        """Row-major export with a commented provenance header."""
        path = Path(path)
        sched = self.schedule
        header = (f"kind={self.kind.value},normalized={str(self.normalized).lower()},"
                  f"schedule={sched.provenance.value},seed={sched.seed},"
                  f"rows={self.shape[0]},cols={self.shape[1]}")
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g", header=header)
        return path


def _check_1d(schedule: DelaySchedule) -> np.ndarray:
    if schedule.values.ndim != 1:
        raise DimensionMismatch("expected a schedule of single delays")
    return schedule.values


def build_block_matrix(schedule: DelaySchedule, n: int, normalized: bool = False) -> SensingMatrix:
    """``[cos(n a_m), -sin(n a_m)]`` for ``n = 1..N``."""
    arg = np.outer(_check_1d(schedule), np.arange(1, n + 1))
    mat = SensingMatrix(np.hstack([np.cos(arg), -np.sin(arg)]), MatrixKind.BLOCK, False, schedule)
    return mat.normalize() if normalized else mat


def build_cosine_matrix(schedule: DelaySchedule, n: int, normalized: bool = False) -> SensingMatrix:
    arg = np.outer(_check_1d(schedule), np.arange(1, n + 1))
    mat = SensingMatrix(np.cos(arg), MatrixKind.COSINE, False, schedule)
    return mat.normalize() if normalized else mat


def build_oct_dictionary(energies, omegas, schedule: DelaySchedule, depths,
                         normalized: bool = False) -> SensingMatrix:
    """``B[m, l] = sum_n |c_n|^2 cos(w_n (tau_m - T_l))`` so that ``y = B r``."""
    energies = np.asarray(energies, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    depths = np.asarray(depths, dtype=float)
    if energies.shape != omegas.shape:
        raise DimensionMismatch("one source energy per frequency is required")
    lag = _check_1d(schedule)[:, None] - depths[None, :]
    entries = np.cos(lag[..., None] * omegas) @ energies
    mat = SensingMatrix(entries, MatrixKind.OCT, False, schedule,
                        source_energies=energies, omegas=omegas, depths=depths)
    return mat.normalize() if normalized else mat


def build_2d_cosine_matrix(schedule: DelaySchedule, n1: int, n2: int,
                           normalized: bool = False) -> SensingMatrix:
    """Entry ``cos(n a1_k + m a2_k)`` at flat column ``(n - 1) * n2 + (m - 1)``."""
    pairs = schedule.values
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise DimensionMismatch("expected a schedule of delay pairs")
    n, m = np.divmod(np.arange(n1 * n2), n2)
    arg = np.outer(pairs[:, 0], n + 1) + np.outer(pairs[:, 1], m + 1)
    mat = SensingMatrix(np.cos(arg), MatrixKind.TWO_D, False, schedule)
    return mat.normalize() if normalized else mat


def expected_gram(matrix: SensingMatrix) -> np.ndarray:
    """``E[A^T A]`` over uniformly drawn delays, for integer frequencies."""
    m, k = matrix.shape
    if matrix.kind is MatrixKind.OCT:
        w = matrix.omegas
        if not np.all(w == np.round(w)) or len(set(np.abs(w))) != w.size:
            raise ValueError("closed form needs distinct integer frequencies")
        lag = matrix.depths[:, None] - matrix.depths[None, :]
        gram = (m / 2) * (np.cos(lag[..., None] * w) @ matrix.source_energies ** 2)
    else:
        gram = (m / 2) * np.eye(k)
    return gram * matrix.scale ** 2


def signal_power(matrix: SensingMatrix, x) -> float:
    """``x^T E[A^T A] x``: expected noise-free measurement energy."""
    x = np.asarray(x, dtype=float)
    return float(x @ expected_gram(matrix) @ x)


@dataclass(frozen=True)
class ConcentrationEstimate:
    probability: float
    mean_energy: float
    stderr: float
    hoeffding_bound: float


def _chunks(total: int, size: int) -> list[int]:
    return [min(size, total - start) for start in range(0, total, size)]


def _run_chunks(fn, seed: int, sizes: list[int], workers: int) -> list:
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))
    if workers <= 1:
        return [fn(s, n) for s, n in jobs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def empirical_concentration(x, m: int, trials: int, eps: float, seed: int = 0,
                            workers: int = 1, chunk: int = 500) -> ConcentrationEstimate:
    """Frequency of ``| ||A x||^2 - ||x||^2 | >= eps ||x||^2`` over fresh
    normalised block matrices with ``m`` rows; ``x`` has length 2N."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    if x.size % 2:
        raise DimensionMismatch("block vectors have even length")
    n = x.size // 2
    orders = np.arange(1, n + 1)
    energy = float(x @ x)

    def run(ss, size):
        rng = np.random.default_rng(ss)
        alpha = rng.uniform(0, TWO_PI, (size, m))
        arg = alpha[..., None] * orders
        proj = np.cos(arg) @ x[:n] - np.sin(arg) @ x[n:]
        sq = (2 / m) * np.sum(proj ** 2, axis=1)
        return np.count_nonzero(np.abs(sq - energy) >= eps * energy), sq.sum()

    parts = _run_chunks(run, seed, _chunks(trials, chunk), workers)
    hits = sum(p[0] for p in parts)
    p = hits / trials
    s = np.count_nonzero(x)
    return ConcentrationEstimate(
        probability=p,
        mean_energy=sum(p_[1] for p_ in parts) / trials,
        stderr=math.sqrt(p * (1 - p) / trials),
        hoeffding_bound=min(1.0, 2 * math.exp(-m * eps ** 2 / (2 * s ** 2))),
    )


def isotropy_estimate(m: int, n: int, trials: int, seed: int = 0, workers: int = 1,
                      chunk: int = 20000) -> np.ndarray:
    """Average of ``M a_m a_m^T`` over ``trials * m`` normalised block rows."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    orders = np.arange(1, n + 1)

    def run(ss, size):
        rng = np.random.default_rng(ss)
        arg = np.outer(rng.uniform(0, TWO_PI, size), orders)
        rows = np.sqrt(2.0) * np.hstack([np.cos(arg), -np.sin(arg)])
        return rows.T @ rows

    parts = _run_chunks(run, seed, _chunks(trials * m, chunk), workers)
    return sum(parts) / (trials * m)


def incoherence_parameter(matrix: SensingMatrix) -> float:
    """``max |sqrt(M) A_hat|^2`` for the normalised matrix (at most 2).

    Rounded to 12 decimals so that the bound is not lost to the last ulp of
    the normalisation factor.
    """
    m = matrix.shape[0]
    entries = matrix.entries if matrix.normalized else matrix.normalize().entries
    return round(float(m * np.max(entries ** 2)), 12)


MAX_RIP_COLUMNS = 16


def rip_constant_exhaustive(a, s: int) -> float:
    """Restricted isometry constant of order ``s`` by enumerating supports."""
    a = np.asarray(getattr(a, "entries", a), dtype=float)
    k = a.shape[1]
    if k > MAX_RIP_COLUMNS:
        raise CombinatorialBlowup(f"{k} columns exceeds the exhaustive limit {MAX_RIP_COLUMNS}")
    delta = 0.0
    for support in itertools.combinations(range(k), s):
        sv = np.linalg.svd(a[:, support], compute_uv=False)
        smallest = sv[-1] ** 2 if sv.size == s else 0.0
        delta = max(delta, 1 - smallest, sv[0] ** 2 - 1)
    return float(delta)
