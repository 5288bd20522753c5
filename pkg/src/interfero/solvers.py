"""Sparse and dense recovery of ``x`` from ``y = A x (+ noise)``."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import linprog

from .errors import CombinatorialBlowup, DimensionMismatch, RankDeficientError, ScheduleMismatch
from .sensing import SensingMatrix

SUPPORT_THRESHOLD = 1e-4


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    a: np.ndarray
    y: np.ndarray
    noise_sigma: float | None = None
    nonneg: bool = False

    def __post_init__(self):
        a = np.asarray(getattr(self.a, "entries", self.a), dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != y.size:
            raise DimensionMismatch(f"matrix with {a.shape[0]} rows for {y.size} measurements")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_matrix(cls, matrix: SensingMatrix, y, noise_sigma=None, nonneg=False):
        return cls(matrix.entries, y, noise_sigma, nonneg)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    x_hat: np.ndarray
    residual: float
    iterations: int
    status: Status

    @property
    def support(self) -> np.ndarray:
        return support_of(self.x_hat)


def support_of(x, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    x = np.asarray(x)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0:
        return np.empty(0, dtype=int)
    return np.flatnonzero(np.abs(x) > threshold * peak)


def _result(problem: RecoveryProblem, x, iterations: int, status: Status) -> RecoveryResult:
    x = np.asarray(x, dtype=float)
    residual = float(np.linalg.norm(problem.a @ x - problem.y))
    return RecoveryResult(x, residual, iterations, status)


def _soft(v, k):
    return np.sign(v) * np.maximum(np.abs(v) - k, 0.0)


def _shrink(v, k, nonneg: bool):
    return np.maximum(v - k, 0.0) if nonneg else _soft(v, k)


@dataclass(frozen=True)
class AdmmSettings:
    rho: float = 1.0
    relaxation: float = 1.5
    abstol: float = 1e-8
    reltol: float = 1e-6
    max_iter: int = 50_000


def _converged(x, z, z_old, u, rho, s):
    k = x.size
    r = np.linalg.norm(x - z)
    d = np.linalg.norm(rho * (z - z_old))
    eps_pri = math.sqrt(k) * s.abstol + s.reltol * max(np.linalg.norm(x), np.linalg.norm(z))
    eps_dual = math.sqrt(k) * s.abstol + s.reltol * np.linalg.norm(rho * u)
    return r < eps_pri and d < eps_dual


def basis_pursuit(problem: RecoveryProblem, tol: float = 1e-6,
                  settings: AdmmSettings = AdmmSettings(), polish: bool = True) -> RecoveryResult:
    """Minimise ``||x||_1`` subject to ``A x = y`` by ADMM.

    The affine projection uses a truncated SVD so that rank-deficient or
    badly conditioned ``A A^T`` cannot blow up the iteration.  When
    ``polish`` is set the final iterates are refit by least squares on their
    supports; a refit is kept if it is feasible and no larger in l1 norm
    than the exactly feasible projection iterate.
    """
    a, y = problem.a, problem.y
    k = a.shape[1]
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _result(problem, np.zeros(k), 0, Status.CONVERGED)
    u_, sv, vt = np.linalg.svd(a, full_matrices=False)
    keep = sv > 1e-10 * sv[0]
    u_, sv, vt = u_[:, keep], sv[keep], vt[keep]
    if np.linalg.norm(u_ @ (u_.T @ y) - y) > tol * ynorm:
        return _result(problem, vt.T @ ((u_.T @ y) / sv), 0, Status.INFEASIBLE)
    offset = vt.T @ ((u_.T @ y) / sv)
    s = settings
    x = np.zeros(k)
    z = np.zeros(k)
    u = np.zeros(k)
    status = Status.MAX_ITER
    it = 0
    for it in range(1, s.max_iter + 1):
        v = z - u
        x = v - vt.T @ (vt @ v) + offset
        xr = s.relaxation * x + (1 - s.relaxation) * z
        z_old = z
        z = _shrink(xr + u, 1 / s.rho, problem.nonneg)
        u = u + xr - z
        if _converged(x, z, z_old, u, s.rho, s):
            status = Status.CONVERGED
            break
    feasible = np.linalg.norm(a @ z - y) <= tol * ynorm
    estimate = z if feasible else x
    if polish:
        estimate = _polish_feasible(a, y, (z, x), estimate, tol, problem.nonneg)
    return _result(problem, estimate, it, status)


def _polish_feasible(a, y, iterates, fallback, tol, nonneg):
    """Least-squares refit on the support of each iterate.

    ``x`` (the last iterate) satisfies ``A x = y`` exactly, so its l1 norm
    bounds what a feasible refit may cost.
    """
    best, best_l1 = fallback, np.abs(iterates[-1]).sum()
    ynorm = np.linalg.norm(y)
    for it in iterates:
        support = support_of(it)
        if support.size == 0 or support.size > a.shape[0]:
            continue
        sub = a[:, support]
        if np.linalg.matrix_rank(sub) < support.size:
            continue
        coef = np.linalg.lstsq(sub, y, rcond=None)[0]
        if nonneg and np.any(coef < 0):
            continue
        if np.linalg.norm(sub @ coef - y) > tol * ynorm:
            continue
        l1 = np.abs(coef).sum()
        if l1 <= best_l1 * (1 + 1e-9):
            best = np.zeros_like(it)
            best[support] = coef
            best_l1 = l1
    return best


def default_lambda(k: int) -> float:
    """``10 sqrt(log K)`` where K is the number of unknowns (2N for block matrices)."""
    return 10 * math.sqrt(math.log(k))


def lasso(problem: RecoveryProblem, lam: float | None = None,
          settings: AdmmSettings = AdmmSettings(), polish: bool = True) -> RecoveryResult:
    """Minimise ``0.5 ||A x - y||^2 + lam * sigma * ||x||_1`` by ADMM.

    ``A`` should be the normalised matrix.  With ``polish`` the support and
    signs of the ADMM iterate seed an exact solve of the optimality
    conditions, accepted only when they certify the result.
    """
    if problem.noise_sigma is None or problem.noise_sigma < 0:
        raise ValueError("lasso needs a nonnegative noise level")
    a, y = problem.a, problem.y
    k = a.shape[1]
    lam = default_lambda(k) if lam is None else lam
    penalty = lam * problem.noise_sigma
    s = settings
    # rho acts on the objective divided by the penalty, so tiny penalties
    # do not leave the l1 term swamped by the augmented quadratic
    rho = s.rho * penalty if penalty > 0 else s.rho
    atb = a.T @ y
    chol = np.linalg.cholesky(a.T @ a + rho * np.eye(k))
    x = np.zeros(k)
    z = np.zeros(k)
    u = np.zeros(k)
    status = Status.MAX_ITER
    it = 0
    for it in range(1, s.max_iter + 1):
        rhs = atb + rho * (z - u)
        x = solve_triangular(chol.T, solve_triangular(chol, rhs, lower=True), lower=False)
        xr = s.relaxation * x + (1 - s.relaxation) * z
        z_old = z
        z = _shrink(xr + u, penalty / rho, problem.nonneg)
        u = u + xr - z
        if _converged(x, z, z_old, u, rho, s):
            status = Status.CONVERGED
            break
    if polish:
        z = _polish_lasso(a, y, z, penalty, problem.nonneg)
    return _result(problem, z, it, status)


def _polish_lasso(a, y, z, penalty, nonneg, slack=1e-9):
    support = np.flatnonzero(z)
    if support.size == 0 or support.size > a.shape[0]:
        return z
    sub = a[:, support]
    signs = np.sign(z[support])
    gram = sub.T @ sub
    try:
        coef = np.linalg.solve(gram, sub.T @ y - penalty * signs)
    except np.linalg.LinAlgError:
        return z
    if np.any(np.sign(coef) != signs):
        return z
    out = np.zeros_like(z)
    out[support] = coef
    corr = a.T @ (y - a @ out)
    off = np.ones(z.size, dtype=bool)
    off[support] = False
    upper = penalty * (1 + slack) + slack
    if nonneg:
        ok = np.all(corr[off] <= upper)
    else:
        ok = np.all(np.abs(corr[off]) <= upper)
    return out if ok else z


def dantzig_selector(problem: RecoveryProblem, lam: float | None = None,
                     tol: float = 1e-8) -> RecoveryResult:
    """Minimise ``||x||_1`` subject to ``||A^T (y - A x)||_inf <= lam * sigma``.

    Solved as a linear program in the split ``x = p - q`` with ``p, q >= 0``.
    """
    sigma = problem.noise_sigma or 0.0
    a, y = problem.a, problem.y
    k = a.shape[1]
    lam = default_lambda(k) if lam is None else lam
    bound = lam * sigma
    gram = a.T @ a
    corr = a.T @ y
    if problem.nonneg:
        a_ub = np.vstack([gram, -gram])
        cost = np.ones(k)
    else:
        a_ub = np.block([[gram, -gram], [-gram, gram]])
        cost = np.ones(2 * k)
    b_ub = np.concatenate([corr + bound, bound - corr])
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": tol,
                           "dual_feasibility_tolerance": tol})
    if res.status == 2:
        return _result(problem, np.zeros(k), int(res.nit), Status.INFEASIBLE)
    if res.status != 0:
        return _result(problem, np.zeros(k), int(res.nit), Status.MAX_ITER)
    x = res.x if problem.nonneg else res.x[:k] - res.x[k:]
    return _result(problem, x, int(res.nit), Status.CONVERGED)


def ft_baseline(y, n: int, delays=None) -> RecoveryResult:
    """Modal energies from ``2N`` uniformly spaced measurements by DFT.

    Orders ``1..N-1`` are ``|Y_n| / N``; order N folds onto the Nyquist bin and
    is ``|Y_N| / (2N)``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != 2 * n:
        raise ScheduleMismatch(f"expected {2 * n} uniform samples, got {y.size}")
    if delays is not None:
        expected = 2 * np.pi * np.arange(2 * n) / (2 * n)
        if not np.allclose(np.asarray(delays, dtype=float), expected, rtol=0, atol=1e-12):
            raise ScheduleMismatch("measurements are not on the uniform delay grid")
    spectrum = np.abs(np.fft.fft(y))[1:n + 1] / n
    spectrum[-1] /= 2
    residual = float(np.linalg.norm(np.cos(np.outer(2 * np.pi * np.arange(2 * n) / (2 * n),
                                                    np.arange(1, n + 1))) @ spectrum - y))
    return RecoveryResult(spectrum, residual, 1, Status.CONVERGED)


def least_squares(problem: RecoveryProblem, rank_tol: float = 1e-10) -> RecoveryResult:
    """Minimum-residual solve through a QR factorisation."""
    a, y = problem.a, problem.y
    sv = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank < a.shape[1]:
        raise RankDeficientError(f"numerical rank {rank} < {a.shape[1]} columns")
    q, r = np.linalg.qr(a)
    x = solve_triangular(r, q.T @ y)
    return _result(problem, x, 1, Status.CONVERGED)


MAX_SUPPORTS = 10 ** 6


def exhaustive_sparse_oracle(problem: RecoveryProblem, s: int,
                             tie_tol: float = 1e-9) -> RecoveryResult:
    """Best ``s``-sparse least-squares fit over every support.

    Residuals within ``tie_tol * ||y||`` count as ties, broken by smaller l1
    norm and then by the lexicographically first support.
    """
    a, y = problem.a, problem.y
    k = a.shape[1]
    if math.comb(k, s) > MAX_SUPPORTS:
        raise CombinatorialBlowup(f"C({k}, {s}) supports exceed {MAX_SUPPORTS}")
    scale = max(np.linalg.norm(y), 1e-300)
    best = None
    for support in itertools.combinations(range(k), s):
        sub = a[:, support]
        coef = np.linalg.lstsq(sub, y, rcond=None)[0]
        res = np.linalg.norm(sub @ coef - y)
        key = (res, np.abs(coef).sum())
        if best is None or key[0] < best[0][0] - tie_tol * scale or (
                abs(key[0] - best[0][0]) <= tie_tol * scale and key[1] < best[0][1] - 1e-12):
            best = (key, support, coef)
    x = np.zeros(k)
    x[list(best[1])] = best[2]
    return _result(problem, x, math.comb(k, s), Status.CONVERGED)


def recovery_error(x_true, x_hat) -> float:
    """Scaled error ``||x - x_hat||^2 / ||x||^2``."""
    x_true = np.asarray(x_true, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x_true.shape != x_hat.shape:
        raise DimensionMismatch("vectors differ in length")
    denom = float(x_true @ x_true)
    if denom == 0:
        raise ValueError("scaled error is undefined for a zero reference vector")
    diff = x_true - x_hat
    return float(diff @ diff) / denom
