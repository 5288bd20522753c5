"""Sampling grids, mode bases and the maps between fields and coefficients.

Hermite-Gaussian modes use the width convention ``phi_n(x) = h_n(sqrt(pi) x / sigma)``
where ``h_n`` is the orthonormal Hermite function.  Mode ``n = 0`` is the
Gaussian ``exp(-pi x^2 / (2 sigma^2))``.  A basis of size N holds the modes
``n = 1..N`` so that mode ``n`` picks up the phase ``exp(-1j n alpha)`` under a
generalized delay of order ``alpha``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionMismatch, GridError

TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform 1D grid ``start + spacing * i`` for ``i = 0..count-1``."""

    start: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise GridError(f"grid needs at least 2 points, got {self.count}")
        if not self.spacing > 0:
            raise GridError(f"grid spacing must be positive, got {self.spacing}")

    @classmethod
    def linspace(cls, lo: float, hi: float, count: int) -> "Grid":
        if count < 2:
            raise GridError(f"grid needs at least 2 points, got {count}")
        return cls(float(lo), (float(hi) - float(lo)) / (count - 1), int(count))

    @classmethod
    def periodic(cls, period: float, count: int) -> "Grid":
        """``count`` points covering ``[0, period)`` with the endpoint excluded."""
        return cls(0.0, float(period) / count, int(count))

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.start + self.spacing * np.arange(self.count)
        pts.flags.writeable = False
        return pts

    @property
    def extent(self) -> tuple[float, float]:
        return self.start, self.start + self.spacing * (self.count - 1)

    @property
    def dim(self) -> int:
        return 1

    @property
    def shape(self) -> tuple[int]:
        return (self.count,)

    @property
    def cell(self) -> float:
        return self.spacing


@dataclass(frozen=True)
class Grid2D:
    """Tensor product of two 1D grids; field arrays are indexed ``[ix, iy]``."""

    x: Grid
    y: Grid

    @property
    def dim(self) -> int:
        return 2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x.count, self.y.count)

    @property
    def cell(self) -> float:
        return self.x.spacing * self.y.spacing


def default_grid(sigma: float = 1.0) -> Grid:
    """1024 points over ``[-12 sigma, 12 sigma]``; enough for modes up to 64."""
    return Grid.linspace(-12 * sigma, 12 * sigma, 1024)


def default_grid_2d(sigma_x: float = 1.0, sigma_y: float = 1.0) -> Grid2D:
    return Grid2D(Grid.linspace(-10 * sigma_x, 10 * sigma_x, 256),
                  Grid.linspace(-10 * sigma_y, 10 * sigma_y, 256))


class BasisKind(enum.Enum):
    FOURIER = "fourier"
    HERMITE_GAUSSIAN = "hermite-gaussian"
    HERMITE_GAUSSIAN_2D = "hermite-gaussian-2d"
    FLIPPED_GAUSSIAN = "flipped-gaussian"


@dataclass(frozen=True)
class BasisSpec:
    """Description of an N-element basis.

    Build instances with the classmethod constructors rather than directly.
    """

    kind: BasisKind
    size: int
    sigma: float = 1.0
    sigma_y: float = 1.0
    shape: tuple[int, int] | None = None
    omegas: tuple[float, ...] | None = None
    period: float | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("basis size must be at least 1")
        if self.sigma <= 0 or self.sigma_y <= 0:
            raise ValueError("mode widths must be positive")
        if self.kind is BasisKind.FOURIER:
            if self.omegas is None or len(self.omegas) != self.size:
                raise ValueError("Fourier basis needs one frequency per element")
            if len(set(self.omegas)) != self.size:
                raise ValueError("Fourier frequencies must be distinct")
            if self.period is None or self.period <= 0:
                raise ValueError("Fourier basis needs a positive period")
        if self.kind is BasisKind.HERMITE_GAUSSIAN_2D:
            if self.shape is None or self.shape[0] * self.shape[1] != self.size:
                raise ValueError("2D basis needs shape with prod(shape) == size")

    @classmethod
    def fourier(cls, omegas, period: float | None = None) -> "BasisSpec":
        """Harmonics ``exp(1j omega_n t)``; the period defaults to ``2 pi / gcd``
        for integer frequencies."""
        omegas = tuple(float(w) for w in omegas)
        if period is None:
            ints = np.asarray(omegas)
            if not np.all(ints == np.round(ints)):
                raise ValueError("period is required for non-integer frequencies")
            period = 2 * np.pi / np.gcd.reduce(np.abs(ints).astype(np.int64))
        return cls(BasisKind.FOURIER, len(omegas), omegas=omegas, period=float(period))

    @classmethod
    def harmonics(cls, n: int) -> "BasisSpec":
        """Integer harmonics ``1..n`` with period ``2 pi``."""
        return cls.fourier(range(1, n + 1), 2 * np.pi)

    @classmethod
    def hermite_gaussian(cls, n: int, sigma: float = 1.0) -> "BasisSpec":
        return cls(BasisKind.HERMITE_GAUSSIAN, int(n), sigma=float(sigma))

    @classmethod
    def flipped_gaussian(cls, n: int, sigma: float = 1.0) -> "BasisSpec":
        return cls(BasisKind.FLIPPED_GAUSSIAN, int(n), sigma=float(sigma))

    @classmethod
    def hermite_gaussian_2d(cls, nx: int, ny: int, sigma_x: float = 1.0,
                            sigma_y: float = 1.0) -> "BasisSpec":
        return cls(BasisKind.HERMITE_GAUSSIAN_2D, nx * ny, sigma=float(sigma_x),
                   sigma_y=float(sigma_y), shape=(int(nx), int(ny)))

    @property
    def is_2d(self) -> bool:
        return self.kind is BasisKind.HERMITE_GAUSSIAN_2D

    @property
    def rates(self) -> np.ndarray:
        """Phase rate of each element: ``exp(-1j * rate * alpha)`` under a delay."""
        if self.kind is BasisKind.FOURIER:
            return np.asarray(self.omegas)
        if self.is_2d:
            raise ValueError("2D bases have a pair of rates; use mode_orders()")
        return np.arange(1, self.size + 1, dtype=float)

    def mode_orders(self) -> tuple[np.ndarray, np.ndarray]:
        """Per flat index, the (n, m) mode orders of a 2D basis."""
        nx, ny = self.shape
        n, m = np.divmod(np.arange(self.size), ny)
        return n + 1, m + 1

    def flat_index(self, n: int, m: int) -> int:
        nx, ny = self.shape
        if not (1 <= n <= nx and 1 <= m <= ny):
            raise IndexError(f"mode ({n}, {m}) outside {nx}x{ny} basis")
        return (n - 1) * ny + (m - 1)

    def unflatten(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.size:
            raise IndexError(k)
        n, m = divmod(k, self.shape[1])
        return n + 1, m + 1


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid | Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise DimensionMismatch(
                f"field shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell)

    def norm(self) -> float:
        return float(np.sqrt(self.energy()))

    def inner(self, other: "Field") -> complex:
        """``<self, other>`` with the conjugate on ``self``."""
        return complex(np.vdot(self.values, other.values) * self.grid.cell)

    def __add__(self, other: "Field") -> "Field":
        if other.grid != self.grid:
            raise DimensionMismatch("fields live on different grids")
        return Field(self.grid, self.values + other.values)

    def scaled(self, factor: complex) -> "Field":
        return Field(self.grid, factor * self.values)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    basis: BasisSpec
    values: np.ndarray
    unit_energy: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).reshape(-1)
        if values.size != self.basis.size:
            raise DimensionMismatch(
                f"{values.size} coefficients for a basis of size {self.basis.size}")
        if self.unit_energy and abs(np.sum(np.abs(values) ** 2) - 1) > 1e-10:
            raise ValueError("coefficients flagged unit-energy do not sum to 1")
        object.__setattr__(self, "values", values)

    @classmethod
    def unit(cls, basis: BasisSpec, index) -> "CoefficientVector":
        """Indicator of one basis element; ``index`` is 1-based (a pair for 2D)."""
        values = np.zeros(basis.size, dtype=complex)
        k = basis.flat_index(*index) if basis.is_2d else int(index) - 1
        if not 0 <= k < basis.size:
            raise IndexError(index)
        values[k] = 1
        return cls(basis, values, unit_energy=True)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def __len__(self):
        return self.values.size


def _normalized_hermite(nmax: int, t: np.ndarray) -> np.ndarray:
    """Rows ``h_0..h_nmax`` of orthonormal Hermite functions at ``t``.

    The recurrence acts on the normalised functions directly, so no factorials
    appear and nothing overflows for large orders.
    """
    out = np.empty((nmax + 1, t.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * t * t)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * t * out[0]
    for k in range(1, nmax):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * t * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


@lru_cache(maxsize=64)
def _hermite_table(nmax: int, sigma: float, grid: Grid) -> np.ndarray:
    dt = np.sqrt(np.pi) * grid.spacing / sigma
    table = _normalized_hermite(nmax, np.sqrt(np.pi) * grid.points / sigma)
    captured = np.sum(table ** 2, axis=1) * dt
    bad = np.flatnonzero(np.abs(1 - captured) > TAIL_TOLERANCE)
    if bad.size:
        n = int(bad[0])
        raise GridError(
            f"grid {grid.extent} with {grid.count} points cannot hold mode {n} "
            f"of width {sigma}: captured energy {captured[n]:.3e}")
    table = table / np.sqrt(np.sum(table ** 2, axis=1, keepdims=True) * grid.spacing)
    table.flags.writeable = False
    return table


def hermite_gaussian_mode(n: int, sigma: float, grid: Grid) -> Field:
    """Hermite-Gaussian mode of order ``n`` with unit discrete L2 norm."""
    if n < 0:
        raise ValueError("mode order must be nonnegative")
    return Field(grid, _hermite_table(int(n), float(sigma), grid)[n])


def hermite_roots(n: int, sigma: float, grid: Grid, oversample: int = 16) -> np.ndarray:
    """Zero crossings of mode ``n``, found from sign changes on a finer grid."""
    if n == 0:
        return np.empty(0)
    lo, hi = grid.extent
    fine = np.linspace(lo, hi, oversample * (grid.count - 1) + 1)
    h = _normalized_hermite(n, np.sqrt(np.pi) * fine / sigma)[n]
    idx = np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)
    crossings = fine[idx] - h[idx] * (fine[idx + 1] - fine[idx]) / (h[idx + 1] - h[idx])
    # samples landing exactly on a zero (e.g. x = 0 for odd orders)
    exact = fine[1:-1][(h[1:-1] == 0) & (np.sign(h[:-2]) * np.sign(h[2:]) < 0)]
    roots = np.sort(np.concatenate([crossings, exact]))
    if roots.size != n:
        raise GridError(f"located {roots.size} zeros of mode {n}, expected {n}")
    return roots


def flipped_gaussian_mode(n: int, sigma: float, grid: Grid) -> Field:
    """Gaussian whose sign flips at each zero of the order-``n`` Hermite mode.

    A sample sitting exactly on a zero takes the sign to its right, so the
    modulus is the unit-norm Gaussian everywhere.
    """
    if n < 0:
        raise ValueError("mode order must be nonnegative")
    x = grid.points
    sign = np.ones_like(x)
    for r in hermite_roots(n, sigma, grid):
        sign *= np.where(x >= r, 1.0, -1.0)
    return Field(grid, sign * _hermite_table(0, float(sigma), grid)[0])


def fourier_mode_table(basis: BasisSpec, grid: Grid) -> np.ndarray:
    """Rows ``exp(1j w_n t)`` normalised to unit discrete norm on ``grid``."""
    rows = np.exp(1j * np.outer(basis.rates, grid.points))
    return rows / np.sqrt(np.sum(np.abs(rows) ** 2, axis=1, keepdims=True) * grid.spacing)


@lru_cache(maxsize=64)
def _flipped_table(size: int, sigma: float, grid: Grid) -> np.ndarray:
    table = np.array([flipped_gaussian_mode(n, sigma, grid).values.real
                      for n in range(1, size + 1)])
    table.flags.writeable = False
    return table


def mode_table(basis: BasisSpec, grid: Grid) -> np.ndarray:
    """Sampled basis elements, one row per element (1D bases only)."""
    if grid.dim != 1 or basis.is_2d:
        raise DimensionMismatch("mode_table is for 1D bases on 1D grids")
    if basis.kind is BasisKind.FOURIER:
        return fourier_mode_table(basis, grid)
    if basis.kind is BasisKind.HERMITE_GAUSSIAN:
        return _hermite_table(basis.size, basis.sigma, grid)[1:]
    return _flipped_table(basis.size, basis.sigma, grid)


def _axis_tables(basis: BasisSpec, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = basis.shape
    tx = _hermite_table(nx, basis.sigma, grid.x)[1:]
    ty = _hermite_table(ny, basis.sigma_y, grid.y)[1:]
    return tx, ty


def _check_pair(basis: BasisSpec, grid) -> None:
    if basis.is_2d != (grid.dim == 2):
        raise DimensionMismatch(f"{basis.kind.value} basis on a {grid.dim}D grid")


def synthesize_field(coeffs: CoefficientVector, grid: Grid | Grid2D) -> Field:
    """Superpose the basis elements weighted by ``coeffs``."""
    basis = coeffs.basis
    _check_pair(basis, grid)
    if basis.is_2d:
        tx, ty = _axis_tables(basis, grid)
        c = coeffs.values.reshape(basis.shape)
        return Field(grid, tx.T @ c @ ty)
    return Field(grid, coeffs.values @ mode_table(basis, grid))


def analyze_field(field: Field, basis: BasisSpec) -> CoefficientVector:
    """Project a field onto each basis element with quadrature-weighted sums."""
    grid = field.grid
    _check_pair(basis, grid)
    if basis.is_2d:
        tx, ty = _axis_tables(basis, grid)
        c = tx.conj() @ field.values @ ty.conj().T * grid.cell
        return CoefficientVector(basis, c.reshape(-1))
    table = mode_table(basis, grid)
    return CoefficientVector(basis, table.conj() @ field.values * grid.spacing)


def gram_matrix(basis: BasisSpec, grid: Grid | Grid2D) -> np.ndarray:
    """``|<phi_n, phi_k>|`` for every pair of basis elements."""
    _check_pair(basis, grid)
    if basis.is_2d:
        tx, ty = _axis_tables(basis, grid)
        gx = tx.conj() @ tx.T * grid.x.spacing
        gy = ty.conj() @ ty.T * grid.y.spacing
        return np.abs(np.kron(gx, gy))
    table = mode_table(basis, grid)
    return np.abs(table.conj() @ table.T * grid.spacing)
