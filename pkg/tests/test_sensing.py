import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interfero.delay import diagonal_delay
from interfero.errors import CombinatorialBlowup, DimensionMismatch
from interfero.grid import BasisSpec, CoefficientVector, Grid, synthesize_field
from interfero.interferometer import (SampleArm, analytic_interferogram, field_interferogram,
                                      normalize_measurements)
from interfero.sensing import (DelaySchedule, MatrixKind, Provenance, build_2d_cosine_matrix,
                               build_block_matrix, build_cosine_matrix, build_oct_dictionary,
                               empirical_concentration, expected_gram, incoherence_parameter,
                               isotropy_estimate, nyquist_schedule, rip_constant_exhaustive,
                               sample_delays_uniform)

seeds = st.integers(0, 2 ** 32 - 1)


def schedule(*values):
    return DelaySchedule(np.array(values, dtype=float))


class TestSchedules:
    def test_same_seed_same_schedule(self):
        a, b = sample_delays_uniform(25, 99), sample_delays_uniform(25, 99)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.provenance is Provenance.UNIFORM and a.seed == 99

    def test_uniform_mean(self):
        assert sample_delays_uniform(10 ** 6, 1).values.mean() == pytest.approx(np.pi, abs=0.01)

    @given(st.integers(1, 200), seeds)
    def test_range_and_nesting(self, m, seed):
        s = sample_delays_uniform(m, seed)
        assert len(s) == m
        assert np.all((s.values >= 0) & (s.values < 2 * np.pi))
        np.testing.assert_array_equal(s.prefix(max(1, m // 2)).values, s.values[:max(1, m // 2)])

    def test_avoid_singular(self):
        s = sample_delays_uniform(5000, 3, avoid_singular=True)
        r = np.mod(s.values, np.pi)
        assert np.min(np.minimum(r, np.pi - r)) >= 1e-3

    def test_pairs(self):
        assert sample_delays_uniform(7, 0, pairs=True).values.shape == (7, 2)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            sample_delays_uniform(0, 1)
        with pytest.raises(ValueError):
            schedule(0.1, 2 * np.pi)

    def test_nyquist_sizes(self):
        s = nyquist_schedule(64)
        assert len(s) == 128 and s.provenance is Provenance.NYQUIST
        np.testing.assert_allclose(np.diff(s.values), np.pi / 64, atol=1e-15)
        np.testing.assert_allclose(nyquist_schedule(1).values, [0, np.pi])

    def test_nyquist_cosine_sums_vanish(self):
        alpha = nyquist_schedule(64).values
        sums = np.cos(np.outer(np.arange(1, 128), alpha)).sum(axis=1)
        assert np.max(np.abs(sums)) <= 1e-10


class TestBuilders:
    def test_block_single_row(self):
        np.testing.assert_array_equal(build_block_matrix(schedule(0.0), 1).entries, [[1, 0]])
        np.testing.assert_allclose(build_block_matrix(schedule(np.pi / 2), 2).entries,
                                   [[0, -1, -1, 0]], atol=1e-15)

    @given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                    min_size=6, max_size=6),
           st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                    min_size=6, max_size=6), seeds)
    def test_forward_model_identity(self, cv, dv, seed):
        basis = BasisSpec.hermite_gaussian(6)
        c, d = CoefficientVector(basis, cv), CoefficientVector(basis, dv)
        sched = sample_delays_uniform(20, seed)
        g = np.conj(c.values) * d.values
        x = np.concatenate([g.real, g.imag])
        y = normalize_measurements(analytic_interferogram(c, d, sched.values))
        assert np.max(np.abs(build_block_matrix(sched, 6) @ x - y)) <= 1e-12 * (1 + c.energy() + d.energy())

    @given(st.integers(1, 40), st.integers(1, 20), seeds)
    def test_entry_bounds(self, m, n, seed):
        sched = sample_delays_uniform(m, seed)
        for build in (build_block_matrix, build_cosine_matrix):
            raw = build(sched, n)
            assert np.all(np.abs(raw.entries) <= 1)
            scaled = build(sched, n, normalized=True)
            assert scaled.normalized and np.all(np.abs(scaled.entries) <= np.sqrt(2 / m) + 1e-15)

    def test_cosine_zero_row_and_energies(self):
        assert np.all(build_cosine_matrix(schedule(0.0), 5).entries == 1)
        sched = sample_delays_uniform(30, 2)
        energies = np.random.default_rng(0).uniform(0, 1, 12)
        y = build_cosine_matrix(sched, 12) @ energies
        np.testing.assert_allclose(y, np.cos(np.outer(sched.values, np.arange(1, 13))) @ energies)

    def test_nyquist_cosine_orthogonality(self):
        a = build_cosine_matrix(nyquist_schedule(64), 64).entries[:, :63]
        np.testing.assert_allclose(a.T @ a, 64 * np.eye(63), atol=1e-10)

    def test_two_d(self):
        assert np.all(build_2d_cosine_matrix(DelaySchedule(np.zeros((1, 2))), 3, 4).entries == 1)
        pairs = sample_delays_uniform(50, 8, pairs=True)
        mat = build_2d_cosine_matrix(pairs, 10, 10)
        assert mat.shape == (50, 100) and mat.kind is MatrixKind.TWO_D
        col = BasisSpec.hermite_gaussian_2d(10, 10).flat_index(5, 7)
        np.testing.assert_allclose(mat.entries[:, col],
                                   np.cos(5 * pairs.values[:, 0] + 7 * pairs.values[:, 1]))
        with pytest.raises(DimensionMismatch):
            build_2d_cosine_matrix(sample_delays_uniform(5, 1), 2, 2)

    def test_oct_flat_source_unit_entry(self):
        n = 8
        b = build_oct_dictionary(np.full(n, 1 / n), np.arange(1, n + 1), schedule(0.0), [0.0])
        assert b.entries[0, 0] == pytest.approx(1.0)

    def test_oct_fig_sized(self):
        depths = np.pi * np.arange(100) / 64
        b = build_oct_dictionary(np.full(64, 1 / 64), np.arange(1, 65),
                                 sample_delays_uniform(60, 1), depths)
        assert b.shape == (60, 100) and b.kind is MatrixKind.OCT

    def test_oct_matches_field_simulation(self):
        n = 12
        basis = BasisSpec.harmonics(n)
        rng = np.random.default_rng(21)
        c = CoefficientVector(basis, rng.uniform(0.3, 1, n))
        depths = np.pi * np.arange(30) / n
        r = np.zeros(30)
        r[[2, 9, 17]] = [0.8, 0.5, 0.3]
        on = r != 0
        arm = SampleArm.layered(r[on], depths[on])
        taus = sample_delays_uniform(25, 4)
        grid = Grid.periodic(2 * np.pi, 128)
        ig = field_interferogram(synthesize_field(c, grid), lambda t: diagonal_delay(basis, t),
                                 arm, basis, taus.values)
        b = build_oct_dictionary(np.abs(c.values) ** 2, basis.rates, taus, depths)
        np.testing.assert_allclose(b @ r, normalize_measurements(ig), atol=1e-8)

    def test_oct_energy_length_checked(self):
        with pytest.raises(DimensionMismatch):
            build_oct_dictionary([1, 2], [1, 2, 3], schedule(0.1), [0.0])

    def test_expected_gram_block(self):
        mat = build_block_matrix(sample_delays_uniform(25, 0), 4)
        np.testing.assert_allclose(expected_gram(mat), 12.5 * np.eye(8))
        np.testing.assert_allclose(expected_gram(mat.normalize()), np.eye(8), atol=1e-14)

    def test_csv_export(self, tmp_path):
        mat = build_block_matrix(sample_delays_uniform(5, 17), 3, normalized=True)
        path = mat.to_csv(tmp_path / "a.csv")
        header = path.read_text().splitlines()[0]
        assert "kind=block" in header and "seed=17" in header and "normalized=true" in header
        np.testing.assert_array_equal(np.loadtxt(path, delimiter=","), mat.entries)


class TestIsotropy:
    def test_eight_modes(self):
        cov = isotropy_estimate(1, 8, 10 ** 5, seed=1)
        assert np.max(np.abs(cov - np.eye(16))) <= 0.02
        np.testing.assert_allclose(np.diag(cov), 1, atol=0.02)

    def test_single_mode_closed_form(self):
        # E[2 cos^2] = 1 and E[2 sin^2] = 1 by quadrature
        alpha = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        assert np.mean(2 * np.cos(alpha) ** 2) == pytest.approx(1, abs=1e-14)
        assert np.mean(2 * np.sin(alpha) ** 2) == pytest.approx(1, abs=1e-14)

    @pytest.mark.parametrize("trials", [500, 5000])
    def test_tolerance_scales(self, trials):
        cov = isotropy_estimate(4, 3, trials, seed=2)
        assert np.max(np.abs(cov - np.eye(6))) <= 3 / np.sqrt(trials)

    def test_worker_split_is_deterministic(self):
        a = isotropy_estimate(2, 3, 3000, seed=5, workers=1, chunk=1000)
        b = isotropy_estimate(2, 3, 3000, seed=5, workers=3, chunk=1000)
        np.testing.assert_array_equal(a, b)


class TestIncoherence:
    def test_zero_delay_gives_two(self):
        sched = DelaySchedule(np.concatenate([[0.0], sample_delays_uniform(9, 1).values]))
        assert incoherence_parameter(build_block_matrix(sched, 64)) == 2.0

    @given(st.integers(1, 60), st.integers(1, 30), seeds)
    def test_bounded_by_two(self, m, n, seed):
        assert incoherence_parameter(build_block_matrix(sample_delays_uniform(m, seed), n)) <= 2

    def test_random_schedule_near_two(self):
        hits = sum(1.9 < incoherence_parameter(build_block_matrix(sample_delays_uniform(25, s), 64)) <= 2
                   for s in range(50))
        assert hits >= 48


class TestConcentration:
    x = np.zeros(128)
    x[[1, 20, 70, 100]] = [0.5, -0.5, 0.5, 0.5]

    def test_mean_energy(self):
        est = empirical_concentration(self.x, 25, 10 ** 4, 0.5, seed=1)
        assert est.mean_energy == pytest.approx(1.0, rel=0.01)

    def test_decreasing_in_m(self):
        probs = [empirical_concentration(self.x, m, 2000, 0.5, seed=m).probability
                 for m in (16, 32, 64, 128, 256)]
        for a, b in zip(probs, probs[1:]):
            assert b <= a + 3 * np.sqrt(max(a, 1e-3) / 2000)
        assert probs[-1] < probs[0]

    def test_hoeffding_envelope(self):
        est = empirical_concentration(self.x, 256, 2000, 0.5, seed=3)
        assert est.hoeffding_bound == pytest.approx(min(1, 2 * np.exp(-256 * 0.25 / 32)))
        assert est.probability <= est.hoeffding_bound

    def test_large_eps_never_deviates(self):
        assert empirical_concentration(self.x, 512, 500, 0.99, seed=4).probability == 0

    def test_eps_range(self):
        with pytest.raises(ValueError):
            empirical_concentration(self.x, 10, 10, 1.0)


class TestRip:
    def test_orthonormal_columns(self):
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((10, 6)))
        assert rip_constant_exhaustive(q, 1) == pytest.approx(0, abs=1e-12)

    def test_matches_eigenvalue_oracle(self):
        a = build_block_matrix(sample_delays_uniform(6, 12), 8, normalized=True).entries
        oracle = 0.0
        for pair in itertools.combinations(range(16), 2):
            sub = a[:, pair]
            eig = np.linalg.eigvalsh(sub.T @ sub)
            oracle = max(oracle, 1 - eig[0], eig[-1] - 1)
        assert rip_constant_exhaustive(a, 2) == pytest.approx(oracle, abs=1e-12)

    def test_median_decreases_with_m(self):
        medians = [np.median([rip_constant_exhaustive(
            build_block_matrix(sample_delays_uniform(m, seed), 8, normalized=True), 2)
            for seed in range(100)]) for m in (8, 32, 128)]
        assert medians[0] > medians[1] > medians[2]

    def test_size_limit(self):
        with pytest.raises(CombinatorialBlowup):
            rip_constant_exhaustive(np.eye(17), 2)
