import unittest
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from cba import (cba_coefficients, cba_probabilities_exact, exact_mean_side_population,
                 exact_mean_side_population_rational, exact_qfi, exact_qfi_rational, exact_sx_qfi,
                 pairing_identity, recursion_holds, wick_factor)
from errors import SpinorInputError
from fockspace import mean_side_population
from metrology import SX, qfi_direction


class TestCbaCoefficients(unittest.TestCase):
    def test_two_atoms(self):
        self.assertEqual(cba_probabilities_exact(2), [Fraction(2, 3), Fraction(1, 3)])
        np.testing.assert_allclose(cba_coefficients(2).c, [np.sqrt(2 / 3), np.sqrt(1 / 3)], atol=1e-15)

    def test_exact_normalization(self):
        for N in range(2, 41):
            self.assertEqual(sum(cba_probabilities_exact(N)), 1)

    def test_log_domain_matches_rationals(self):
        for N in (7, 30, 60):
            exact = np.array([float(p) for p in cba_probabilities_exact(N)])
            np.testing.assert_allclose(cba_coefficients(N).probabilities, exact, atol=1e-14)

    def test_large_n_is_finite_and_positive(self):
        s = cba_coefficients(2000)
        self.assertTrue(np.all(s.c.real > 0))

    def test_mean_side_population(self):
        self.assertEqual(exact_mean_side_population_rational(2), Fraction(1, 3))
        for N in (2, 11, 500):
            self.assertAlmostEqual(mean_side_population(cba_coefficients(N)), exact_mean_side_population(N), places=9)


class TestExactQfi(unittest.TestCase):
    def test_closed_forms(self):
        self.assertEqual(exact_qfi_rational("cba", 2), 3)
        self.assertEqual(exact_qfi_rational("tf", 4), 12)
        self.assertEqual(exact_qfi("CBA", 500), 125250.0)
        with self.assertRaises(SpinorInputError):
            exact_qfi("tf", 5)
        with self.assertRaises(SpinorInputError):
            exact_qfi("noon", 4)

    def test_pair_sum_representation(self):
        for N in range(2, 25):
            self.assertEqual(exact_sx_qfi(N), Fraction(N * (N + 1), 2))
            self.assertTrue(recursion_holds(N))

    def test_covariance_agrees_with_closed_form(self):
        for N in (3, 20, 301):
            self.assertAlmostEqual(qfi_direction(cba_coefficients(N), SX) / exact_qfi("cba", N), 1.0, delta=1e-10)


class TestCombinatorics(unittest.TestCase):
    def test_wick_factors(self):
        self.assertEqual(wick_factor(4, 2), 3)
        self.assertEqual(wick_factor(4, 1), 6)
        self.assertEqual(wick_factor(6, 3), 15)
        self.assertEqual(wick_factor(0, 0), 1)
        with self.assertRaises(SpinorInputError):
            wick_factor(3, 2)
        with self.assertRaises(SpinorInputError):
            wick_factor(-1, 0)

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_pairing_identity(self, data):
        m = data.draw(st.integers(min_value=0, max_value=30))
        n = data.draw(st.integers(min_value=0, max_value=2 * m))
        lhs, rhs = pairing_identity(n, m)
        self.assertEqual(lhs, rhs)

    def test_pairing_identity_rejects_out_of_range(self):
        with self.assertRaises(SpinorInputError):
            pairing_identity(7, 3)


if __name__ == "__main__":
    unittest.main()
