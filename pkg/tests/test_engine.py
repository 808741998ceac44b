import numpy as np
import pytest
from scipy.linalg import expm

from shotvqe import engine
from shotvqe.engine import EngineError
from shotvqe.spectrum import total_spin_sq

from conftest import dense_swap_matrix, random_state


class TestDimerState:
    def test_single_singlet_amplitudes(self):
        v = engine.dimer_state([(0, 1)], 2)
        expected = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)
        np.testing.assert_allclose(v, expected, atol=1e-15)

    def test_spin_zero(self):
        v = engine.dimer_state([(0, 1), (2, 3), (4, 5)], 6)
        assert abs(total_spin_sq(v)) < 1e-10

    def test_distinct_pairings_give_distinct_states(self):
        a = engine.dimer_state([(0, 1), (2, 3)], 4)
        b = engine.dimer_state([(0, 3), (1, 2)], 4)
        assert abs(np.linalg.norm(a) - 1) < 1e-12
        assert abs(np.linalg.norm(b) - 1) < 1e-12
        assert np.abs(a - b).max() > 0.1

    def test_invalid_pairings(self):
        with pytest.raises(EngineError, match="matching"):
            engine.dimer_state([(0, 1)], 4)
        with pytest.raises(EngineError, match="even"):
            engine.dimer_state([(0, 1), (2, 2)], 5)


class TestEswap:
    def test_theta_zero_is_identity(self, rng):
        v = random_state(4, rng)
        w = engine.apply_eswap(v.copy(), 1, 3, 0.0)
        np.testing.assert_allclose(w, v, atol=1e-15)

    def test_half_pi_swaps_with_phase(self):
        # |up_0 down_1> sits at index 2 (bit 1 set).
        v = np.zeros(4, dtype=complex)
        v[2] = 1.0
        w = engine.apply_eswap(v, 0, 1, np.pi / 2)
        expected = np.zeros(4, dtype=complex)
        expected[1] = 1j
        np.testing.assert_allclose(w, expected, atol=1e-15)

    def test_matches_dense_matrix_exponential(self, rng):
        P = dense_swap_matrix(2, 0, 1)
        worst = 0.0
        for _ in range(500):
            theta = rng.uniform(-np.pi, np.pi)
            psi = random_state(2, rng)
            dense = expm(1j * theta * P) @ psi
            kernel = engine.apply_eswap(psi.copy(), 0, 1, theta)
            worst = max(worst, np.abs(dense - kernel).max())
        assert worst < 1e-12

    def test_inverse_composition(self, rng):
        v = random_state(5, rng)
        theta = 0.8173
        w = engine.apply_eswap(v.copy(), 0, 3, theta)
        w = engine.apply_eswap(w, 0, 3, -theta)
        np.testing.assert_allclose(w, v, atol=1e-12)

    def test_disjoint_gates_commute(self, rng):
        v = random_state(6, rng)
        a = engine.apply_eswap(engine.apply_eswap(v.copy(), 0, 1, 0.3), 2, 5, 0.7)
        b = engine.apply_eswap(engine.apply_eswap(v.copy(), 2, 5, 0.7), 0, 1, 0.3)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_norm_preserved(self, rng):
        v = random_state(6, rng)
        for _ in range(20):
            i, j = rng.choice(6, size=2, replace=False)
            engine.apply_eswap(v, int(i), int(j), rng.uniform(-3, 3))
        assert abs(np.linalg.norm(v) - 1) < 1e-10

    def test_spin_conservation_through_random_strings(self, rng):
        v = engine.dimer_state([(0, 1), (2, 3), (4, 5), (6, 7)], 8)
        for _ in range(60):
            i, j = rng.choice(8, size=2, replace=False)
            engine.apply_eswap(v, int(i), int(j), rng.uniform(-np.pi, np.pi))
        assert abs(total_spin_sq(v)) < 1e-10

    def test_rows_variant_matches(self, rng):
        block = np.array([random_state(4, rng) for _ in range(3)])
        single = np.array([engine.apply_eswap(row.copy(), 1, 2, 0.4)
                           for row in block])
        engine.apply_eswap_rows(block, 1, 2, 0.4)
        np.testing.assert_allclose(block, single, atol=1e-14)

    def test_site_validation(self):
        v = np.zeros(4, dtype=complex)
        with pytest.raises(EngineError):
            engine.apply_eswap(v, 0, 0, 0.1)
        with pytest.raises(EngineError):
            engine.apply_eswap(v, 0, 5, 0.1)


class TestPermutation:
    def test_identity(self, rng):
        v = random_state(3, rng)
        np.testing.assert_allclose(engine.apply_permutation(v, [0, 1, 2]), v)

    def test_transposition_equals_swap(self, rng):
        v = random_state(4, rng)
        a = engine.apply_permutation(v, [0, 3, 2, 1])
        b = engine.apply_eswap(v.copy(), 1, 3, np.pi / 2) / 1j
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_unitarity(self, rng):
        u, w = random_state(5, rng), random_state(5, rng)
        g = [2, 0, 4, 1, 3]
        lhs = engine.inner(engine.apply_permutation(u, g),
                           engine.apply_permutation(w, g))
        assert abs(lhs - engine.inner(u, w)) < 1e-12

    def test_composition(self, rng):
        v = random_state(4, rng)
        g = np.array([1, 2, 3, 0])
        h = np.array([0, 2, 1, 3])
        gh = g[h]
        a = engine.apply_permutation(engine.apply_permutation(v, h), g)
        b = engine.apply_permutation(v, gh)
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_rejects_non_bijection(self):
        with pytest.raises(EngineError, match="bijection"):
            engine.apply_permutation(np.zeros(4, dtype=complex), [0, 0])


class TestInnerAndDots:
    def test_self_inner_is_one(self, rng):
        v = random_state(4, rng)
        assert abs(engine.inner(v, v) - 1.0) < 1e-12

    def test_orthogonal_basis_states(self):
        a = np.zeros(4, dtype=complex)
        b = np.zeros(4, dtype=complex)
        a[1] = 1.0
        b[2] = 1.0
        assert engine.inner(a, b) == 0.0

    def test_conjugate_linearity(self, rng):
        u, v = random_state(3, rng), random_state(3, rng)
        assert abs(engine.inner(1j * u, v) - (-1j) * engine.inner(u, v)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(EngineError, match="mismatch"):
            engine.inner(np.zeros(4, dtype=complex), np.zeros(8, dtype=complex))

    def test_swap_dot_matches_apply(self, rng):
        u, v = random_state(4, rng), random_state(4, rng)
        direct = engine.inner(u, engine.apply_swap(v, 0, 2))
        assert abs(engine.swap_dot(u, v, 0, 2) - direct) < 1e-13
