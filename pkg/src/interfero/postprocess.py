"""Turn recovered measurement-model vectors back into physical quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InconsistentCoefficients
from .grid import CoefficientVector
from .solvers import RecoveryProblem, basis_pursuit, least_squares, support_of


def extract_d_coefficients(x_hat, c_known: CoefficientVector,
                           tol: float = 1e-9) -> CoefficientVector:
    """Sample-arm coefficients from a recovered ``[x1; x2]`` block vector.

    ``x1 + 1j * x2`` equals ``conj(c) * d``, hence ``d = (x1 + 1j x2) / conj(c)``.
    """
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    n = c_known.basis.size
    if x_hat.size != 2 * n:
        raise DimensionMismatch(f"expected {2 * n} entries, got {x_hat.size}")
    g = x_hat[:n] + 1j * x_hat[n:]
    c = c_known.values
    tiny = np.abs(c) < 1e-12
    if np.any(tiny & (np.abs(g) > tol)):
        raise InconsistentCoefficients("nonzero cross term where the reference is empty")
    d = np.zeros(n, dtype=complex)
    d[~tiny] = g[~tiny] / np.conj(c[~tiny])
    return CoefficientVector(c_known.basis, d)


@dataclass(frozen=True)
class Layer:
    reflectivity: float
    round_trip: float


def extract_layers(d: CoefficientVector, c: CoefficientVector, omegas, depth_grid,
                   tol: float = 1e-6) -> list[Layer]:
    """Reflectivities on a grid of candidate depths from the sample coefficients.

    Solves ``sum_l r_l exp(-1j w_n T_l) = d_n / c_n`` for real ``r``: least
    squares when the grid has at most N points, basis pursuit otherwise.
    """
    c_vals = c.values
    if np.any(np.abs(c_vals) < 1e-12):
        raise InconsistentCoefficients("source coefficients must be nonzero")
    omegas = np.asarray(omegas, dtype=float)
    depth_grid = np.asarray(depth_grid, dtype=float)
    ratio = d.values / c_vals
    phases = np.exp(-1j * np.outer(omegas, depth_grid))
    a = np.vstack([phases.real, phases.imag])
    rhs = np.concatenate([ratio.real, ratio.imag])
    problem = RecoveryProblem(a, rhs)
    if depth_grid.size <= omegas.size:
        r = least_squares(problem).x_hat
    else:
        r = basis_pursuit(problem, tol=tol).x_hat
    return [Layer(float(r[k]), float(depth_grid[k])) for k in support_of(r)]


def localization_phase(x_hat) -> float:
    """Path-difference phase ``D`` in ``[0, 2 pi)`` from ``|a1||a2|[cos D, sin D]``."""
    x_hat = np.asarray(x_hat, dtype=float)
    return float(np.mod(np.arctan2(x_hat[1], x_hat[0]), 2 * np.pi))
