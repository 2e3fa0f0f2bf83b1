import unittest

import numpy as np

from errors import SpinorInputError
from fockspace import (SpinorState, basis_dim, basis_occupations, fidelity, mean_side_population,
                       mean_zero_population, overlap, renormalize, require_even, side_population_variance,
                       state_fock, state_polar, state_twin_fock, validate_system_size)


class TestBasis(unittest.TestCase):
    def test_basis_dimension_and_occupations(self):
        self.assertEqual(basis_dim(4), 3)
        self.assertEqual(basis_dim(5), 3)
        occ = basis_occupations(4)
        self.assertEqual([(o.n_minus, o.n_zero, o.n_plus) for o in occ], [(0, 4, 0), (1, 2, 1), (2, 0, 2)])
        self.assertTrue(all(o.N == 4 and o.D == 0 for o in occ))

    def test_invalid_sizes(self):
        for bad in (1, 0, -3, 2.5, True):
            with self.assertRaises(SpinorInputError):
                validate_system_size(bad)
        with self.assertRaises(SpinorInputError):
            require_even(7)
        self.assertEqual(require_even(8), 8)


class TestSpinorState(unittest.TestCase):
    def test_rejects_wrong_length_unnormalized_and_nan(self):
        with self.assertRaises(SpinorInputError):
            SpinorState(4, [1.0, 0.0])
        with self.assertRaises(SpinorInputError):
            SpinorState(4, [1.0, 1.0, 0.0])
        with self.assertRaises(SpinorInputError):
            SpinorState(4, [np.nan, 0.0, 0.0])

    def test_amplitudes_are_read_only(self):
        s = state_polar(6)
        with self.assertRaises(ValueError):
            s.c[0] = 0.5

    def test_fock_states(self):
        tf = state_twin_fock(4)
        self.assertEqual(mean_side_population(tf), 2.0)
        self.assertEqual(mean_zero_population(tf), 0.0)
        self.assertEqual(side_population_variance(tf), 0.0)
        self.assertEqual(mean_side_population(state_polar(9)), 0.0)
        with self.assertRaises(SpinorInputError):
            state_fock(4, 3)
        with self.assertRaises(SpinorInputError):
            state_twin_fock(5)

    def test_renormalize_reports_drift(self):
        s, drift = renormalize(2, [3.0, 4.0j])
        self.assertAlmostEqual(drift, 4.0)
        np.testing.assert_allclose(s.probabilities, [0.36, 0.64])
        with self.assertRaises(SpinorInputError):
            renormalize(2, [0.0, 0.0])

    def test_overlap_and_fidelity(self):
        a = SpinorState(2, np.array([1.0, 1.0j]) / np.sqrt(2))
        self.assertAlmostEqual(fidelity(a, a), 1.0)
        self.assertAlmostEqual(fidelity(a, state_polar(2)), 0.5)
        with self.assertRaises(SpinorInputError):
            overlap(a, state_polar(4))


if __name__ == "__main__":
    unittest.main()
