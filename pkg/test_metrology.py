import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from cba import cba_coefficients, exact_qfi
from errors import SpinorInputError
from fockspace import SpinorState, state_polar, state_twin_fock
from fullspace import check_oracle_size, full_space
from metrology import (AY, JX, NAMED_DIRECTIONS, SX, coefficients_AB, covariance_matrix, full_space_covariance,
                       full_space_variance_oracle, qfi_direction, qfi_optimal, reference_limits)


def random_state(N, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=N // 2 + 1) + 1j * rng.normal(size=N // 2 + 1)
    return SpinorState(N, c / np.linalg.norm(c))


class TestCoefficients(unittest.TestCase):
    def test_two_atom_values(self):
        A, B = coefficients_AB(state_twin_fock(2))
        self.assertAlmostEqual(A, 0.25)
        self.assertEqual(B, 0)
        A, B = coefficients_AB(cba_coefficients(2))
        self.assertAlmostEqual(A, 5 / 12)
        self.assertAlmostEqual(B.real, 1 / 3)
        self.assertAlmostEqual(B.imag, 0.0)
        self.assertAlmostEqual(covariance_matrix(cba_coefficients(2)).lambda_plus, 0.75)

    def test_polar_state(self):
        A, B = coefficients_AB(state_polar(9))
        self.assertAlmostEqual(A, 9 / 4)
        self.assertEqual(B, 0)


class TestOptimalQfi(unittest.TestCase):
    def test_twin_fock(self):
        for N in (2, 10, 100, 500, 2000):
            best = qfi_optimal(state_twin_fock(N))
            self.assertAlmostEqual(best.qfi / exact_qfi("tf", N), 1.0, delta=1e-9)
            self.assertEqual(best.labels, ["Jx", "Jy"])

    def test_cba(self):
        for N in (2, 10, 100, 500, 2000):
            best = qfi_optimal(cba_coefficients(N))
            self.assertAlmostEqual(best.qfi / (N * (N + 1) / 2), 1.0, delta=1e-9)
            self.assertEqual(set(best.labels), {"Sx", "Ay"})

    def test_polar_state_sits_at_sql(self):
        N = 40
        s = state_polar(N)
        self.assertAlmostEqual(qfi_direction(s, SX), N)
        self.assertAlmostEqual(qfi_direction(s, AY), N)
        self.assertAlmostEqual(qfi_direction(s, JX), 0.0)

    def test_direction_validation(self):
        s = state_polar(4)
        with self.assertRaises(SpinorInputError):
            qfi_direction(s, np.ones(8))
        with self.assertRaises(SpinorInputError):
            qfi_direction(s, np.ones(3) / np.sqrt(3))

    def test_reference_limits(self):
        for name in ("Sx", "Ay", "Jx", "G1", "G3"):
            sql, hl = reference_limits(NAMED_DIRECTIONS[name], 10)
            self.assertAlmostEqual(sql, 10.0)
            self.assertAlmostEqual(hl, 100.0)
        sql, _ = reference_limits(NAMED_DIRECTIONS["G8"], 10)
        self.assertAlmostEqual(sql, 7.5)


class TestCovarianceOracle(unittest.TestCase):
    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=2, max_value=10), st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_closed_form_matches_dense(self, N, seed):
        s = random_state(N, seed)
        np.testing.assert_allclose(covariance_matrix(s).full(), full_space_covariance(s), atol=1e-10)

    def test_named_pseudospins_are_gell_mann_combinations(self):
        space = full_space(4)
        np.testing.assert_allclose(space.generator("Sx"), space.combination(SX), atol=1e-12)
        np.testing.assert_allclose(space.generator("Jx"), space.combination(JX), atol=1e-12)
        np.testing.assert_allclose(space.generator("Lx"), 2 * space.generator("Sx"), atol=1e-12)

    def test_variance_oracle_matches_direction(self):
        s = random_state(6, 7)
        self.assertAlmostEqual(full_space_variance_oracle(s, "Sx"), qfi_direction(s, SX), places=10)
        self.assertAlmostEqual(full_space_variance_oracle(s, "Jx"), qfi_direction(s, JX), places=10)

    def test_eigenpairs_diagonalize_the_covariance(self):
        cov = covariance_matrix(random_state(12, 11))
        gamma = cov.full()
        for value, vec, _ in cov.eigenpairs():
            np.testing.assert_allclose(gamma @ vec, value * vec, atol=1e-10)

    def test_oracle_size_cap(self):
        with self.assertRaises(SpinorInputError):
            check_oracle_size(21)


if __name__ == "__main__":
    unittest.main()
