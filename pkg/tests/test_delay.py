import numpy as np
import pytest
from hypothesis import given, strategies as st

from interfero.delay import (Chirp, DiagonalDelay, KernelOperator, OpticalParams, PhaseMask,
                             apply_operator, compose_stages, diagonal_delay, fold_stages,
                             fresnel_kernel, frft_delay, frft_kernel, slm_cascade_frft,
                             slm_cascade_stages, slm_phase_coefficients, slm_phase_kernel)
from interfero.errors import AliasingError, RepresentationError, SingularOrderError
from interfero.grid import (BasisSpec, CoefficientVector, Grid, analyze_field, default_grid,
                            hermite_gaussian_mode, synthesize_field)

PARAMS = OpticalParams.matched(1.0)
GRID = default_grid()
BASIS = BasisSpec.hermite_gaussian(64)
angles = st.floats(-10, 10, allow_nan=False)
coeffs = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                  min_size=8, max_size=8)


def interior(grid, half=6.0):
    return np.abs(grid.points) < half


class TestDiagonalDelay:
    def test_zero_is_identity(self, rng):
        c = CoefficientVector(BASIS, rng.standard_normal(64) + 1j * rng.standard_normal(64))
        np.testing.assert_array_equal(apply_operator(diagonal_delay(BASIS, 0.0), c).values, c.values)

    def test_unit_vector_phase(self):
        out = apply_operator(diagonal_delay(BASIS, 0.7), CoefficientVector.unit(BASIS, 5))
        assert out.values[4] == pytest.approx(np.exp(-5j * 0.7))
        assert np.count_nonzero(out.values) == 1

    def test_fourier_delay_is_time_shift_phase(self):
        basis = BasisSpec.fourier([1.5, 2.5], period=4 * np.pi)
        np.testing.assert_allclose(diagonal_delay(basis, 0.3).eigenvalues,
                                   np.exp(-1j * np.array([1.5, 2.5]) * 0.3))

    @given(angles, angles, coeffs)
    def test_additive(self, a, b, values):
        basis = BasisSpec.hermite_gaussian(8)
        c = CoefficientVector(basis, values)
        two_step = apply_operator(diagonal_delay(basis, b), apply_operator(diagonal_delay(basis, a), c))
        one_step = apply_operator(diagonal_delay(basis, a).then(diagonal_delay(basis, b)), c)
        np.testing.assert_allclose(two_step.values, one_step.values, atol=1e-12)
        np.testing.assert_allclose(one_step.values,
                                   apply_operator(diagonal_delay(basis, a + b), c).values,
                                   atol=1e-9 * (1 + abs(a) + abs(b)) * 5)

    @given(angles, coeffs)
    def test_norm_preserved(self, a, values):
        c = CoefficientVector(BasisSpec.hermite_gaussian(8), values)
        out = apply_operator(diagonal_delay(c.basis, a), c)
        assert np.linalg.norm(out.values) == pytest.approx(np.linalg.norm(c.values), rel=1e-12, abs=1e-300)

    def test_on_fields_matches_coefficients(self, rng):
        c = CoefficientVector(BASIS, rng.standard_normal(64))
        field_out = apply_operator(diagonal_delay(BASIS, 1.1), synthesize_field(c, GRID))
        expected = synthesize_field(apply_operator(diagonal_delay(BASIS, 1.1), c), GRID)
        np.testing.assert_allclose(field_out.values, expected.values, atol=1e-10)

    def test_kernel_form_matches(self, rng):
        basis = BasisSpec.hermite_gaussian(16)
        c = CoefficientVector(basis, rng.standard_normal(16))
        field = synthesize_field(c, GRID)
        op = DiagonalDelay(basis, 0.4)
        np.testing.assert_allclose(apply_operator(op.to_kernel(GRID), field).values,
                                   apply_operator(op, field).values, atol=1e-10)


class TestApplyOperator:
    def test_kernel_on_coefficients_rejected(self):
        with pytest.raises(RepresentationError):
            apply_operator(frft_kernel(1.0, GRID, PARAMS), CoefficientVector.unit(BASIS, 1))

    def test_identity_kernel(self, rng):
        field = synthesize_field(CoefficientVector(BASIS, rng.standard_normal(64)), GRID)
        ident = KernelOperator(GRID, dense=np.eye(GRID.count))
        np.testing.assert_array_equal(apply_operator(ident, field).values, field.values)

    def test_fast_path_matches_dense(self, rng):
        grid = Grid.linspace(-8, 8, 300)
        op = frft_kernel(0.9, grid, PARAMS)
        v = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        np.testing.assert_allclose(op.apply(v), op.matrix @ v, atol=1e-11)
        batch = rng.standard_normal((300, 3))
        np.testing.assert_allclose(op.apply(batch), op.matrix @ batch, atol=1e-11)


class TestFrft:
    def test_quarter_turn_is_fourier_kernel(self):
        grid = Grid.linspace(-4, 4, 65)
        x = grid.points
        kernel = frft_kernel(np.pi / 2, grid, PARAMS).kernel()
        scale = PARAMS.scale
        expected = np.exp(-2j * np.pi * np.outer(x, x) / (2 * scale)) / np.sqrt(2 * scale)
        np.testing.assert_allclose(kernel, expected, atol=1e-12)

    def test_gaussian_invariant(self):
        g = hermite_gaussian_mode(0, 1.0, GRID)
        out = apply_operator(frft_kernel(0.8, GRID, PARAMS), g)
        assert np.linalg.norm(out.values - g.values) * np.sqrt(GRID.spacing) <= 1e-3

    def test_unitary_on_band_limited_input(self, rng):
        field = synthesize_field(CoefficientVector(BASIS, rng.standard_normal(64)), GRID)
        out = apply_operator(frft_kernel(2.2, GRID, PARAMS), field)
        assert out.norm() / field.norm() == pytest.approx(1, abs=1e-3)

    @pytest.mark.parametrize("alpha", [0.0, np.pi, 2 * np.pi + 5e-4])
    def test_singular_orders_rejected(self, alpha):
        with pytest.raises(SingularOrderError):
            frft_kernel(alpha, GRID, PARAMS)
        with pytest.raises(SingularOrderError):
            slm_cascade_frft(alpha, PARAMS, GRID)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5, 4.0, 5.9])
    def test_eigenfunctions(self, alpha):
        op = frft_kernel(alpha, GRID, PARAMS)
        for n in (1, 2, 7, 31, 64):
            out = apply_operator(op, hermite_gaussian_mode(n, 1.0, GRID))
            c = analyze_field(out, BASIS).values
            expected = np.zeros(64, dtype=complex)
            expected[n - 1] = np.exp(-1j * n * alpha)
            assert np.max(np.abs(c - expected)) <= 1e-3

    @pytest.mark.parametrize("alpha", [1e-4, 0.01, 0.5, np.pi - 0.002, np.pi + 0.3, -0.1, 6.28])
    @pytest.mark.parametrize("realization", ["direct", "cascade"])
    def test_delay_operator_any_order(self, alpha, realization):
        op = frft_delay(alpha, GRID, PARAMS, realization)
        c = CoefficientVector(BASIS, np.linspace(1, 2, 64))
        out = analyze_field(apply_operator(op, synthesize_field(c, GRID)), BASIS)
        np.testing.assert_allclose(out.values, c.values * np.exp(-1j * BASIS.rates * alpha),
                                   atol=1e-9)


class TestFresnel:
    grid = Grid.linspace(-2, 2, 33)

    def test_symmetric(self):
        k = fresnel_kernel(2.0, PARAMS, self.grid).kernel()
        np.testing.assert_allclose(k, k.T, atol=1e-14)

    def test_on_axis_value(self):
        f = PARAMS.focal_length
        lam = PARAMS.wavelength
        k = fresnel_kernel(2 * f, PARAMS, self.grid).kernel()
        expected = np.exp(4j * np.pi * f / lam) / np.sqrt(1j * lam * 2 * f)
        np.testing.assert_allclose(np.diag(k), expected, atol=1e-12)

    def test_aliasing_detected(self):
        with pytest.raises(AliasingError):
            fresnel_kernel(0.01, PARAMS, self.grid)


class TestSlm:
    def test_zero_phase_is_identity(self):
        np.testing.assert_array_equal(slm_phase_kernel(0.0, PARAMS, GRID).matrix, np.eye(GRID.count))

    def test_pure_phase(self):
        d = np.diag(slm_phase_kernel(3.7, PARAMS, GRID).matrix)
        np.testing.assert_allclose(np.abs(d), 1, atol=1e-14)

    def test_phase_formula(self):
        x = GRID.points
        d = np.diag(slm_phase_kernel(0.8, PARAMS, GRID).matrix)
        np.testing.assert_allclose(d, np.exp(-1j * np.pi * 0.8 * x ** 2 / (2 * PARAMS.wavelength)),
                                   atol=1e-12)

    def test_outer_coefficient_vanishes_at_quarter_turn(self):
        p_outer, p_middle = slm_phase_coefficients(np.pi / 2, PARAMS)
        assert p_outer == pytest.approx(0, abs=1e-15)
        assert p_middle == pytest.approx(1 / PARAMS.focal_length)


class TestCascade:
    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
    def test_kernel_matches_direct(self, alpha):
        grid = Grid.linspace(-8, 8, 512)
        inside = interior(grid)
        cascade = slm_cascade_frft(alpha, PARAMS, grid).kernel()
        direct = frft_kernel(alpha, grid, PARAMS).kernel()
        assert np.max(np.abs(cascade - direct)[np.ix_(inside, inside)]) <= 1e-6

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
    def test_stage_by_stage_propagation(self, alpha):
        # each propagation integrated numerically on a wide grid, no closed-form folding
        wide = Grid.linspace(-48, 48, 2 ** 14)
        stepwise = KernelOperator(wide, slm_cascade_stages(alpha, PARAMS), alpha)
        direct = frft_kernel(alpha, wide, PARAMS)
        inside = interior(wide)
        for n in (0, 3, 10):
            f = hermite_gaussian_mode(n, 1.0, wide).values
            assert np.max(np.abs(stepwise.apply(f) - direct.apply(f))[inside]) <= 1e-6

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
    def test_eigenmodes_through_cascade(self, alpha):
        op = slm_cascade_frft(alpha, PARAMS, GRID)
        for n in (1, 4, 20):
            mode = hermite_gaussian_mode(n, 1.0, GRID)
            out = apply_operator(op, mode)
            err = np.linalg.norm(out.values - np.exp(-1j * n * alpha) * mode.values)
            assert err / np.linalg.norm(mode.values) <= 1e-3

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
    def test_inverse_order_undoes(self, alpha, rng):
        field = synthesize_field(CoefficientVector(BASIS, rng.standard_normal(64)), GRID)
        forward = slm_cascade_frft(alpha, PARAMS, GRID)
        back = slm_cascade_frft(-alpha, PARAMS, GRID)
        out = apply_operator(back, apply_operator(forward, field))
        assert np.linalg.norm(out.values - field.values) / np.linalg.norm(field.values) <= 1e-3

    def test_kernel_additivity(self, rng):
        field = synthesize_field(CoefficientVector(BASIS, rng.standard_normal(64)), GRID)
        a, b = 0.7, 1.2
        two = frft_kernel(a, GRID, PARAMS).then(frft_kernel(b, GRID, PARAMS))
        assert two.alpha == pytest.approx(a + b)
        np.testing.assert_allclose(apply_operator(two, field).values,
                                   apply_operator(frft_kernel(a + b, GRID, PARAMS), field).values,
                                   atol=1e-8)


class TestStageAlgebra:
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 3), st.floats(-3, 3))
    def test_mask_then_chirp_composition(self, coef, a, b, c):
        grid = Grid.linspace(-2, 2, 9)
        chirp = Chirp(1.0 + 0.5j, a, b, c)
        mask = PhaseMask(coef, 0.25)
        composed = compose_stages(chirp, mask)
        staged = KernelOperator(grid, (mask, chirp)).matrix
        np.testing.assert_allclose(KernelOperator(grid, (composed,)).matrix, staged, atol=1e-10)

    def test_fold_of_single_stage(self):
        chirp = Chirp(1.0, 0.1, -0.3, 0.2)
        assert fold_stages([chirp]) is chirp
