import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from cba import cba_coefficients
from decomposition import (ConditionalState, conditional_qfi, conditional_state, decomposition_identity,
                           from_gh_basis, h_number_distribution, husimi, husimi_axes, to_gh_basis,
                           two_mode_sx_variance)
from errors import SpinorInputError
from fockspace import SpinorState, state_polar
from fullspace import full_space


def random_state(N, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=N // 2 + 1) + 1j * rng.normal(size=N // 2 + 1)
    return SpinorState(N, c / np.linalg.norm(c))


class TestBasisChange(unittest.TestCase):
    def test_two_atom_chain(self):
        g = to_gh_basis(cba_coefficients(2))
        P = h_number_distribution(g)
        np.testing.assert_allclose(P, [5 / 6, 0.0, 1 / 6], atol=1e-12)
        self.assertAlmostEqual(conditional_qfi(conditional_state(g, 0)), 18 / 5, places=12)
        lhs, rhs = decomposition_identity(cba_coefficients(2))
        self.assertAlmostEqual(lhs, 3.0, places=12)
        self.assertAlmostEqual(rhs, 3.0, places=12)

    def test_round_trip_and_norm(self):
        s = random_state(24, 5)
        g = to_gh_basis(s)
        self.assertAlmostEqual(g.norm, 1.0, places=12)
        np.testing.assert_allclose(from_gh_basis(g).c, s.c, atol=1e-12)

    def test_polar_state_is_the_empty_sector(self):
        g = to_gh_basis(state_polar(10))
        self.assertAlmostEqual(abs(g.amplitudes[0, 0]), 1.0)
        self.assertAlmostEqual(h_number_distribution(g)[0], 1.0)

    def test_only_even_side_numbers_appear(self):
        g = to_gh_basis(random_state(12, 9))
        self.assertTrue(np.all(g.amplitudes[1::2, :] == 0))
        self.assertTrue(np.all(g.amplitudes[:, 1::2] == 0))

    def test_matches_dense_side_mode_construction(self):
        for N in range(2, 11):
            space = full_space(N)
            s = random_state(N, 100 + N)
            psi = space.embed(s)
            amps = to_gh_basis(s).amplitudes
            for n_h in range(N + 1):
                for n_g in range(N + 1):
                    if n_h + n_g > N:
                        self.assertEqual(amps[n_h, n_g], 0)
                        continue
                    expected = np.vdot(space.side_mode_fock(n_g, n_h), psi)
                    self.assertAlmostEqual(abs(amps[n_h, n_g] - expected), 0.0, delta=1e-12)

    def test_dense_side_mode_states_are_orthonormal(self):
        space = full_space(4)
        states = np.array([space.side_mode_fock(a, b) for a in range(5) for b in range(5 - a)])
        np.testing.assert_allclose(states @ states.T, np.eye(len(states)), atol=1e-12)
        with self.assertRaises(SpinorInputError):
            space.side_mode_fock(3, 2)

    def test_large_n_identity(self):
        lhs, rhs = decomposition_identity(cba_coefficients(500))
        self.assertAlmostEqual(rhs / lhs, 1.0, delta=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_identity_holds_for_any_state(self, N, seed):
        lhs, rhs = decomposition_identity(random_state(N, seed))
        self.assertAlmostEqual(lhs, rhs, delta=1e-9 * max(1.0, lhs))


class TestConditionalStates(unittest.TestCase):
    def test_empty_and_out_of_range_sectors(self):
        g = to_gh_basis(cba_coefficients(2))
        with self.assertRaises(SpinorInputError):
            conditional_state(g, 1)
        with self.assertRaises(SpinorInputError):
            conditional_state(g, 3)

    def test_two_mode_variance(self):
        # one particle in a0: Var(Sx) = 1/4
        self.assertAlmostEqual(two_mode_sx_variance(np.array([1.0, 0.0])), 0.25)
        self.assertEqual(two_mode_sx_variance(np.array([1.0])), 0.0)


class TestHusimi(unittest.TestCase):
    def test_needs_a_particle(self):
        g = to_gh_basis(cba_coefficients(2))
        with self.assertRaises(SpinorInputError):
            husimi(conditional_state(g, 2))

    def test_normalization(self):
        c = conditional_state(to_gh_basis(cba_coefficients(4)), 0)
        thetas, phis, Q = husimi(c)
        inner = trapezoid(Q, phis, axis=1)
        total = trapezoid(inner * np.sin(thetas), thetas)
        self.assertAlmostEqual((c.n + 1) / (4 * math.pi) * total, 1.0, delta=1e-3)

    def test_half_turn_symmetry(self):
        c = conditional_state(to_gh_basis(cba_coefficients(8)), 2)
        _, phis, Q = husimi(c, theta_points=31, phi_points=41)
        half = 20
        self.assertAlmostEqual(phis[half], math.pi)
        np.testing.assert_allclose(Q[:, half:], Q[:, : Q.shape[1] - half], atol=1e-12)

    def test_single_particle_is_coherent(self):
        c = ConditionalState(N=1, N_h=0, probability=1.0, amplitudes=np.array([0.6, 0.8j]))
        thetas, phis, Q = husimi(c)
        self.assertAlmostEqual(float(Q.max()), 1.0, delta=1e-3)
        self.assertAlmostEqual(float(Q[0, 0]), 0.36, places=12)

    def test_cba_lobe_positions(self):
        N = 500
        g = to_gh_basis(cba_coefficients(N))

        empty = conditional_state(g, 0)
        thetas, phis, Q = husimi(empty, theta_points=91, phi_points=181)
        row, col = np.unravel_index(int(np.argmax(Q)), Q.shape)
        self.assertAlmostEqual(thetas[row], math.pi / 2, delta=0.1)
        phi = phis[col] % math.pi
        self.assertLess(min(phi, math.pi - phi), 0.1)
        # the partner lobe half a turn away
        self.assertAlmostEqual(Q[row, (col + 90) % 180], Q[row, col], delta=1e-9)

        half = conditional_state(g, N // 2)
        thetas, _, Q = husimi(half, theta_points=91, phi_points=181)
        row, _ = np.unravel_index(int(np.argmax(Q)), Q.shape)
        self.assertLess(thetas[row], 0.2)

    def test_axes(self):
        thetas, phis = husimi_axes(5, 9)
        self.assertAlmostEqual(thetas[-1], math.pi)
        self.assertAlmostEqual(phis[-1], 2 * math.pi)
        self.assertEqual((thetas.size, phis.size), (5, 9))


if __name__ == "__main__":
    unittest.main()
