"""Generalized delay operators.

Two representations are supported.  ``DiagonalDelay`` acts on basis
coefficients by the phases ``exp(-1j * rate_n * alpha)``.  ``KernelOperator``
acts on sampled fields through a sequence of structured stages: quadratic
chirp kernels (integral operators) and quadratic phase masks (pointwise
multipliers).  Chirp stages compose in closed form, so a cascade of masks and
free-space propagations collapses to a single kernel exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .errors import AliasingError, DimensionMismatch, RepresentationError, SingularOrderError
from .grid import BasisSpec, CoefficientVector, Field, Grid, analyze_field, mode_table, synthesize_field

SINGULAR_MARGIN = 1e-3


@dataclass(frozen=True)
class OpticalParams:
    wavelength: float = 1.0
    focal_length: float = 1.0

    def __post_init__(self):
        if not (self.wavelength > 0 and self.focal_length > 0):
            raise ValueError("wavelength and focal length must be positive")

    @classmethod
    def matched(cls, sigma: float, wavelength: float = 1.0) -> "OpticalParams":
        """Optics whose frFT eigenmodes are Hermite-Gaussians of width ``sigma``."""
        return cls(wavelength, sigma ** 2 / wavelength)

    @property
    def scale(self) -> float:
        return self.wavelength * self.focal_length


@dataclass(frozen=True)
class Chirp:
    """Integral kernel ``amp * exp(1j*pi*(a*x**2 + b*x*u + c*u**2))`` mapping u to x."""

    amp: complex
    a: float
    b: float
    c: float

    def __call__(self, x, u) -> np.ndarray:
        """Kernel samples on the outer product of ``x`` (rows) and ``u`` (columns)."""
        x = np.asarray(x, dtype=float)[:, None]
        u = np.asarray(u, dtype=float)[None, :]
        return self.amp * np.exp(1j * np.pi * (self.a * x * x + self.b * x * u + self.c * u * u))


@dataclass(frozen=True)
class PhaseMask:
    """Pointwise multiplier ``exp(1j*(phase + pi*coef*x**2))``."""

    coef: float = 0.0
    phase: float = 0.0

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * (self.phase + np.pi * self.coef * x * x))


Stage = Chirp | PhaseMask


def compose_stages(outer: Stage, inner: Stage) -> Stage:
    """Exact composition ``outer after inner`` of two structured stages."""
    if isinstance(outer, PhaseMask) and isinstance(inner, PhaseMask):
        return PhaseMask(outer.coef + inner.coef, outer.phase + inner.phase)
    if isinstance(outer, PhaseMask):
        return Chirp(inner.amp * np.exp(1j * outer.phase), inner.a + outer.coef, inner.b, inner.c)
    if isinstance(inner, PhaseMask):
        return Chirp(outer.amp * np.exp(1j * inner.phase), outer.a, outer.b, outer.c + inner.coef)
    q = outer.c + inner.a
    if abs(q) < 1e-12:
        raise SingularOrderError("chirp composition degenerates to a delta kernel")
    amp = outer.amp * inner.amp * np.exp(1j * np.pi * np.sign(q) / 4) / np.sqrt(abs(q))
    return Chirp(amp,
                 outer.a - outer.b ** 2 / (4 * q),
                 -outer.b * inner.b / (2 * q),
                 inner.c - inner.b ** 2 / (4 * q))


def fold_stages(stages) -> Stage:
    """Collapse stages given in application order into a single stage."""
    stages = list(stages)
    acc = stages[0]
    for stage in stages[1:]:
        acc = compose_stages(stage, acc)
    return acc


def _apply_chirp(chirp: Chirp, grid: Grid, values: np.ndarray) -> np.ndarray:
    """Quadrature sum ``dx * sum_k K(x_i, x_k) v_k`` as a chirp-z convolution."""
    g, dx, x0 = grid.count, grid.spacing, grid.start
    x = grid.points
    k = np.arange(g)
    # x_i*x_k = x0^2 + x0*dx*(i+k) + dx^2*(i^2 + k^2 - (i-k)^2)/2
    half = np.pi * chirp.b * dx * dx / 2
    inner = np.exp(1j * (np.pi * chirp.c * x * x + np.pi * chirp.b * x0 * dx * k + half * k * k))
    outer = np.exp(1j * (np.pi * chirp.a * x * x + np.pi * chirp.b * (x0 * x0 + x0 * dx * k)
                         + half * k * k))
    d = np.arange(-(g - 1), g)
    taps = np.exp(-1j * half * d * d)
    n = sfft.next_fast_len(3 * g - 2)
    v = values.reshape(g, -1) * inner[:, None]
    conv = sfft.ifft(sfft.fft(v, n, axis=0) * sfft.fft(taps, n)[:, None], axis=0)
    out = conv[g - 1:2 * g - 1] * (chirp.amp * dx * outer)[:, None]
    return out.reshape(values.shape)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Operator on sampled fields.

    ``stages`` are applied in order.  ``dense``, when given, replaces the stages
    with an explicit matrix ``D`` acting as ``D @ values``.
    """

    grid: Grid
    stages: tuple[Stage, ...] = ()
    alpha: float | None = None
    dense: np.ndarray | None = None

    @cached_property
    def matrix(self) -> np.ndarray:
        """Discrete operator ``D`` such that applying equals ``D @ values``."""
        if self.dense is not None:
            return self.dense
        x = self.grid.points
        mat = np.eye(self.grid.count, dtype=complex)
        for stage in self.stages:
            if isinstance(stage, PhaseMask):
                mat = stage.values(x)[:, None] * mat
            else:
                mat = (stage(x, x) * self.grid.spacing) @ mat
        mat.flags.writeable = False
        return mat

    def kernel(self) -> np.ndarray:
        """Kernel samples ``K(x_i, x_k)`` (the matrix without its quadrature weight)."""
        return self.matrix / self.grid.spacing

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to one field (shape ``(G,)``) or a batch (shape ``(G, B)``)."""
        values = np.asarray(values, dtype=complex)
        if values.shape[0] != self.grid.count:
            raise DimensionMismatch("values do not match the operator grid")
        if self.dense is not None:
            return self.dense @ values
        x = self.grid.points
        for stage in self.stages:
            if isinstance(stage, PhaseMask):
                m = stage.values(x)
                values = m * values if values.ndim == 1 else m[:, None] * values
            else:
                values = _apply_chirp(stage, self.grid, values)
        return values

    def then(self, other: "KernelOperator") -> "KernelOperator":
        """Operator that applies ``self`` and then ``other``."""
        if other.grid != self.grid:
            raise DimensionMismatch("operators live on different grids")
        alpha = None
        if self.alpha is not None and other.alpha is not None:
            alpha = self.alpha + other.alpha
        if self.dense is None and other.dense is None:
            return KernelOperator(self.grid, self.stages + other.stages, alpha)
        return KernelOperator(self.grid, alpha=alpha, dense=other.matrix @ self.matrix)

    def folded(self) -> "KernelOperator":
        """Same operator with every stage merged in closed form."""
        if self.dense is not None or len(self.stages) < 2:
            return self
        return KernelOperator(self.grid, (fold_stages(self.stages),), self.alpha)


@dataclass(frozen=True)
class DiagonalDelay:
    """Delay acting as ``exp(-1j * rate_n * alpha)`` on basis element n.

    For a 2D basis ``alpha`` is a pair and element (n, m) picks up
    ``exp(-1j * (n * alpha[0] + m * alpha[1]))``.
    """

    basis: BasisSpec
    alpha: float | tuple[float, float]

    @property
    def eigenvalues(self) -> np.ndarray:
        if self.basis.is_2d:
            n, m = self.basis.mode_orders()
            a1, a2 = self.alpha
            return np.exp(-1j * (n * a1 + m * a2))
        return np.exp(-1j * self.basis.rates * self.alpha)

    def then(self, other: "DiagonalDelay") -> "DiagonalDelay":
        if other.basis != self.basis:
            raise DimensionMismatch("delays defined on different bases")
        if self.basis.is_2d:
            return DiagonalDelay(self.basis, (self.alpha[0] + other.alpha[0],
                                              self.alpha[1] + other.alpha[1]))
        return DiagonalDelay(self.basis, self.alpha + other.alpha)

    def to_kernel(self, grid: Grid) -> KernelOperator:
        """Materialise ``sum_n lambda_n phi_n phi_n^*`` as a dense field operator."""
        table = mode_table(self.basis, grid)
        dense = (table.T * self.eigenvalues) @ table.conj() * grid.spacing
        alpha = None if self.basis.is_2d else self.alpha
        return KernelOperator(grid, alpha=alpha, dense=dense)


DelayOperator = DiagonalDelay | KernelOperator


def diagonal_delay(basis: BasisSpec, alpha) -> DiagonalDelay:
    return DiagonalDelay(basis, alpha)


def apply_operator(op: DelayOperator, target: Field | CoefficientVector):
    """Apply a delay to coefficients or to a sampled field."""
    if isinstance(op, DiagonalDelay):
        if isinstance(target, CoefficientVector):
            if target.basis != op.basis:
                raise DimensionMismatch("coefficients and delay use different bases")
            return CoefficientVector(target.basis, target.values * op.eigenvalues)
        coeffs = analyze_field(target, op.basis)
        return synthesize_field(apply_operator(op, coeffs), target.grid)
    if isinstance(target, CoefficientVector):
        raise RepresentationError("a kernel operator acts on fields, not coefficients")
    if target.grid != op.grid:
        raise DimensionMismatch("field and operator live on different grids")
    return Field(target.grid, op.apply(target.values))


def _check_order(alpha: float) -> None:
    if abs(np.sin(alpha)) < SINGULAR_MARGIN:
        raise SingularOrderError(
            f"order {alpha} is within {SINGULAR_MARGIN} of a multiple of pi")


def frft_chirp(alpha: float, params: OpticalParams) -> Chirp:
    """Closed-form frFT kernel of order ``alpha`` for optics ``params``."""
    _check_order(alpha)
    s = params.scale
    cot = np.cos(alpha) / np.sin(alpha)
    csc = 1 / np.sin(alpha)
    amp = np.sqrt(1 - 1j * cot) / np.sqrt(2 * s)
    return Chirp(complex(amp), cot / (2 * s), -csc / s, cot / (2 * s))


def frft_kernel(alpha: float, grid: Grid, params: OpticalParams) -> KernelOperator:
    return KernelOperator(grid, (frft_chirp(alpha, params),), float(alpha))


def fresnel_chirp(distance: float, params: OpticalParams) -> Chirp:
    lam = params.wavelength
    amp = np.exp(2j * np.pi * distance / lam) / np.sqrt(1j * lam * distance)
    inv = 1 / (lam * distance)
    return Chirp(complex(amp), inv, -2 * inv, inv)


def fresnel_kernel(distance: float, params: OpticalParams, grid: Grid) -> KernelOperator:
    """Free-space propagation over ``distance``.

    Raises ``AliasingError`` when the kernel chirp is undersampled across the
    grid, i.e. when ``spacing * width > wavelength * distance / 2``.
    """
    lo, hi = grid.extent
    if grid.spacing * (hi - lo) > params.wavelength * distance / 2:
        raise AliasingError(
            f"Fresnel chirp over {distance} aliases on grid of spacing {grid.spacing}")
    return KernelOperator(grid, (fresnel_chirp(distance, params),))


def slm_phase_coefficients(alpha: float, params: OpticalParams) -> tuple[float, float]:
    """Phase coefficients of the outer and middle modulators for order ``alpha``."""
    f = params.focal_length
    p_outer = -(1 / np.sin(alpha) + np.cos(alpha) / np.sin(alpha) - 1) / f
    p_middle = -(np.sin(alpha) - 2) / f
    return p_outer, p_middle


def slm_mask(p: float, params: OpticalParams) -> PhaseMask:
    return PhaseMask(-p / (2 * params.wavelength))


def slm_phase_kernel(p: float, params: OpticalParams, grid: Grid) -> KernelOperator:
    """Pointwise quadratic phase ``exp(-1j*pi*p*x**2/(2*wavelength))``."""
    return KernelOperator(grid, (slm_mask(p, params),))


def slm_cascade_stages(alpha: float, params: OpticalParams) -> tuple[Stage, ...]:
    """Mask, propagation, mask, propagation, mask and global compensator, in
    application order."""
    _check_order(alpha)
    p_outer, p_middle = slm_phase_coefficients(alpha, params)
    prop = fresnel_chirp(2 * params.focal_length, params)
    zeta = 8 * np.pi * params.focal_length / params.wavelength
    # the masks are 2pi-periodic in alpha but alpha/2 is not; use the reduced order
    compensator = PhaseMask(0.0, -zeta + np.mod(alpha, 2 * np.pi) / 2)
    return (slm_mask(p_outer, params), prop, slm_mask(p_middle, params), prop,
            slm_mask(p_outer, params), compensator)


def slm_cascade_frft(alpha: float, params: OpticalParams, grid: Grid) -> KernelOperator:
    """frFT realised by three modulators and two propagations, folded exactly."""
    stages = slm_cascade_stages(alpha, params)
    return KernelOperator(grid, (fold_stages(stages),), float(alpha))


SPLIT_MARGIN = np.pi / 4


def frft_delay(alpha: float, grid: Grid, params: OpticalParams,
               realization: str = "direct") -> KernelOperator:
    """Grid operator realising the order-``alpha`` frFT for field simulation.

    Orders within ``pi/4`` of a multiple of pi have kernels too oscillatory to
    sample on a desk-scale grid, so they are applied as two consecutive
    transforms whose orders are each at least ``pi/4`` away from the
    singular set.
    """
    make = {"direct": frft_chirp,
            "cascade": lambda a, p: fold_stages(slm_cascade_stages(a, p))}[realization]
    alpha = float(alpha)
    r = np.mod(alpha, np.pi)
    if SPLIT_MARGIN <= r <= np.pi - SPLIT_MARGIN:
        return KernelOperator(grid, (make(alpha, params),), alpha)
    shift = np.pi / 2 if r < SPLIT_MARGIN else -np.pi / 2
    first, second = alpha + shift, -shift
    return KernelOperator(grid, (make(first, params), make(second, params)), alpha)
