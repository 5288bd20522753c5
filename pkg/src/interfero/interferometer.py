"""Two-arm interferometer: interferograms, normalisation, noise and the OCT
and localisation forward models.

The cross term between the delayed reference ``c_n exp(-1j n a)`` and the
sample output ``d_n`` is ``2 Re sum_n c_n d_n^* exp(-1j n a)``.  Writing
``theta_n = arg(conj(c_n) d_n)`` gives

    I(a) = sum |c_n|^2 + sum |d_n|^2 + 2 sum |c_n||d_n| cos(n a + theta_n)

so ``x1 = |c||d| cos(theta)`` and ``x2 = |c||d| sin(theta)`` are the real and
imaginary parts of ``conj(c) * d``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .delay import DelayOperator, DiagonalDelay, apply_operator
from .errors import DimensionMismatch, ScheduleMismatch
from .grid import BasisKind, BasisSpec, CoefficientVector, Field, analyze_field, synthesize_field


class ArmKind(enum.Enum):
    IDENTITY = "identity"
    LAYERED = "layered"
    DIAGONAL = "diagonal"


@dataclass(frozen=True, eq=False)
class SampleArm:
    kind: ArmKind
    reflectivities: np.ndarray | None = None
    round_trips: np.ndarray | None = None
    gains: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "SampleArm":
        return cls(ArmKind.IDENTITY)

    @classmethod
    def layered(cls, reflectivities, round_trips) -> "SampleArm":
        """First-order layered reflector ``h(t) = sum_l r_l delta(t - T_l)``."""
        r = np.asarray(reflectivities, dtype=float).reshape(-1)
        t = np.asarray(round_trips, dtype=float).reshape(-1)
        if r.size < 1 or r.size != t.size:
            raise ValueError("need one round-trip time per reflectivity")
        if np.any(np.diff(t) <= 0):
            raise ValueError("round-trip times must be strictly increasing")
        if np.any(np.abs(r) > 1):
            raise ValueError("reflectivities must lie in [-1, 1]")
        return cls(ArmKind.LAYERED, reflectivities=r, round_trips=t)

    @classmethod
    def diagonal(cls, gains) -> "SampleArm":
        return cls(ArmKind.DIAGONAL, gains=np.asarray(gains, dtype=complex).reshape(-1))

    def transfer(self, basis: BasisSpec) -> np.ndarray:
        """Per-element gain ``d_n / c_n``."""
        if self.kind is ArmKind.IDENTITY:
            return np.ones(basis.size, dtype=complex)
        if self.kind is ArmKind.DIAGONAL:
            if self.gains.size != basis.size:
                raise DimensionMismatch("sample-arm gains do not match the basis size")
            return self.gains
        if basis.kind is not BasisKind.FOURIER:
            raise ValueError("a layered sample needs a Fourier basis")
        phases = np.exp(-1j * np.outer(basis.rates, self.round_trips))
        return phases @ self.reflectivities

    def coefficients(self, c: CoefficientVector) -> CoefficientVector:
        return CoefficientVector(c.basis, c.values * self.transfer(c.basis))

    def apply_field(self, field: Field, basis: BasisSpec) -> Field:
        """Sample-arm output field.

        A layered sample is simulated as a sum of scaled, delayed copies of the
        input; other kinds act through the basis expansion.
        """
        if self.kind is ArmKind.IDENTITY:
            return field
        if self.kind is ArmKind.LAYERED:
            out = np.zeros(field.grid.shape, dtype=complex)
            for r, t in zip(self.reflectivities, self.round_trips):
                out += r * apply_operator(DiagonalDelay(basis, float(t)), field).values
            return Field(field.grid, out)
        return synthesize_field(self.coefficients(analyze_field(field, basis)), field.grid)


@dataclass(frozen=True, eq=False)
class Interferogram:
    """Energies recorded per delay; ``delays`` is (M,) or (M, 2) for paired orders."""

    delays: np.ndarray
    intensities: np.ndarray
    reference_energy: float
    sample_energy: float

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        intensities = np.asarray(self.intensities, dtype=float)
        if len(delays) != len(intensities) or len(delays) < 1:
            raise DimensionMismatch("delays and intensities must have equal nonzero length")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "intensities", intensities)

    def __len__(self):
        return len(self.intensities)


def cross_terms(c: CoefficientVector, d: CoefficientVector) -> np.ndarray:
    """``conj(c) * d``; its modulus and phase are ``|c||d|`` and ``theta``."""
    if c.basis != d.basis:
        raise DimensionMismatch("c and d must share a basis")
    return np.conj(c.values) * d.values


def analytic_interferogram(c: CoefficientVector, d: CoefficientVector,
                           delays) -> Interferogram:
    """Closed-form interferogram of a 1D basis expansion."""
    g = cross_terms(c, d)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    phase = np.outer(delays, c.basis.rates) + np.angle(g)
    i1, i2 = c.energy(), d.energy()
    intensities = i1 + i2 + 2 * np.cos(phase) @ np.abs(g)
    return Interferogram(delays, np.maximum(intensities, 0.0), i1, i2)


def analytic_interferogram_2d(c: CoefficientVector, delay_pairs,
                              d: CoefficientVector | None = None) -> Interferogram:
    """Interferogram of a 2D expansion swept by a pair of orders per sample.

    ``delays`` of the result has shape (M, 2).
    """
    if not c.basis.is_2d:
        raise ValueError("expected a 2D basis")
    d = c if d is None else d
    g = cross_terms(c, d)
    pairs = np.atleast_2d(np.asarray(delay_pairs, dtype=float))
    n, m = c.basis.mode_orders()
    phase = np.outer(pairs[:, 0], n) + np.outer(pairs[:, 1], m) + np.angle(g)
    i1, i2 = c.energy(), d.energy()
    intensities = i1 + i2 + 2 * np.cos(phase) @ np.abs(g)
    return Interferogram(pairs, np.maximum(intensities, 0.0), i1, i2)


ReferenceFamily = Callable[[float], DelayOperator] | Sequence[DelayOperator]


def field_interferogram(field: Field, reference: ReferenceFamily, sample: SampleArm,
                        basis: BasisSpec, delays) -> Interferogram:
    """Simulate the interferometer on sampled fields.

    ``reference`` is either a callable mapping a delay to its operator or a
    sequence of operators aligned with ``delays``.  Energies use the
    rectangle rule on the field grid.
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    if callable(reference):
        operators = (reference(a) for a in delays)
    else:
        if len(reference) != len(delays):
            raise DimensionMismatch("one reference operator per delay is required")
        operators = iter(reference)
    sample_out = sample.apply_field(field, basis)
    intensities = np.empty(delays.size)
    ref_energy = np.empty(delays.size)
    for k, op in enumerate(operators):
        ref = apply_operator(op, field)
        if ref.grid != field.grid:
            raise DimensionMismatch("reference operator changed the grid")
        intensities[k] = (ref + sample_out).energy()
        ref_energy[k] = ref.energy()
    return Interferogram(delays, intensities, float(ref_energy.mean()), sample_out.energy())


def normalize_measurements(ig: Interferogram, blind: bool = False) -> np.ndarray:
    """``y = (I - I1 - I2) / 2``.

    With ``blind=True`` the constant ``I1 + I2`` is estimated as the mean of
    ``I`` which requires the delays to form a uniform full-period grid.
    """
    if not blind:
        return (ig.intensities - ig.reference_energy - ig.sample_energy) / 2
    delays = np.sort(np.mod(ig.delays, 2 * np.pi))
    grid = 2 * np.pi * np.arange(delays.size) / delays.size
    if delays.ndim != 1 or not np.allclose(delays, grid, atol=1e-9):
        raise ScheduleMismatch("blind normalisation needs a uniform full-period delay grid")
    return (ig.intensities - ig.intensities.mean()) / 2


def oct_sample_coefficients(c: CoefficientVector, sample: SampleArm,
                            omegas=None) -> CoefficientVector:
    """Sample-arm coefficients ``c_n sum_l r_l exp(-1j w_n T_l)`` (single scattering)."""
    if sample.kind is not ArmKind.LAYERED:
        raise ValueError("expected a layered sample arm")
    w = c.basis.rates if omegas is None else np.asarray(omegas, dtype=float)
    if w.size != c.basis.size:
        raise DimensionMismatch("one frequency per coefficient is required")
    gain = np.exp(-1j * np.outer(w, sample.round_trips)) @ sample.reflectivities
    return CoefficientVector(c.basis, c.values * gain)


def noise_sigma(signal_power: float, snr_db: float | None) -> float:
    """Per-sample noise deviation for ``SNR = signal_power / sigma^2`` in dB."""
    if snr_db is None or math.isinf(snr_db):
        return 0.0
    return math.sqrt(signal_power / 10 ** (snr_db / 10))


def add_noise(y, snr_db: float | None, rng: np.random.Generator, signal_power: float) -> np.ndarray:
    """Add white Gaussian noise whose variance is ``signal_power / 10**(snr/10)``.

    ``signal_power`` is ``x^T E[A^T A] x`` for the sensing model in use (see
    ``sensing.expected_gram``).  ``snr_db`` of ``None`` or ``inf`` leaves ``y``
    unchanged.
    """
    y = np.asarray(y, dtype=float)
    sigma = noise_sigma(signal_power, snr_db)
    if sigma == 0.0:
        return y.copy()
    return y + sigma * rng.standard_normal(y.shape)


def localization_matrix(w1: float, w2: float, times) -> np.ndarray:
    """Rows ``[cos((w1 - w2) t), -sin((w1 - w2) t)]``."""
    if w1 == w2:
        raise ValueError("the two carrier frequencies must differ")
    arg = (w1 - w2) * np.asarray(times, dtype=float)
    return np.column_stack([np.cos(arg), -np.sin(arg)])


def localization_measurements(a1: complex, a2: complex, w1: float, w2: float,
                              d1: float, d2: float, c_light: float, times):
    """Normalised energies of two superposed carriers received after path
    lengths ``d1`` and ``d2``.

    Returns ``(y, x)`` where ``x = |a1||a2| [cos D, sin D]`` and
    ``D = (w2 d2 - w1 d1) / c_light + arg(a1 conj(a2))``; the last term vanishes
    for real positive amplitudes.  ``y`` comes from the superposed signal
    itself and equals ``localization_matrix(w1, w2, times) @ x``.
    """
    t = np.asarray(times, dtype=float)
    localization_matrix(w1, w2, t)
    s1 = a1 * np.exp(1j * w1 * (t - d1 / c_light))
    s2 = a2 * np.exp(1j * w2 * (t - d2 / c_light))
    y = (np.abs(s1 + s2) ** 2 - abs(a1) ** 2 - abs(a2) ** 2) / 2
    delta = (w2 * d2 - w1 * d1) / c_light + np.angle(a1 * np.conj(a2))
    x = abs(a1) * abs(a2) * np.array([np.cos(delta), np.sin(delta)])
    return y, x
