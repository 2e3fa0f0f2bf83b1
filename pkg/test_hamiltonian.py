import unittest

import numpy as np
from scipy.linalg import eigh

from cba import cba_coefficients
from fockspace import SpinorState, fidelity, state_polar, state_twin_fock
from fullspace import full_space
from hamiltonian import (build_hamiltonian, coupling, expectation, ground_state, spectral_gap, spectrum,
                         tridiagonal_apply)


class TestHamiltonian(unittest.TestCase):
    def test_two_atom_spectrum(self):
        self.assertAlmostEqual(coupling(2), -0.25)
        np.testing.assert_allclose(spectrum(2, 0.0), [-0.25, 0.5], atol=1e-14)
        self.assertAlmostEqual(spectral_gap(2, 0.0), 0.75)

    def test_matches_dense_three_mode_hamiltonian(self):
        for N in (2, 3, 5, 6):
            space = full_space(N)
            for q in (-0.8, 0.0, 1.3):
                H_full = space.hamiltonian(q)
                H = build_hamiltonian(N, q).dense()
                for k in range(N // 2 + 1):
                    e = np.zeros(N // 2 + 1)
                    e[k] = 1.0
                    col = space.restrict(H_full @ space.embed(SpinorState(N, e)))
                    np.testing.assert_allclose(col, H[:, k], atol=1e-12)

    def test_q_zero_ground_state_is_cba(self):
        for N in (2, 50, 500):
            _, s = ground_state(build_hamiltonian(N, 0.0))
            np.testing.assert_allclose(s.c, cba_coefficients(N).c, atol=1e-10)

    def test_phase_limits(self):
        _, polar = ground_state(build_hamiltonian(20, 5.0))
        _, tf = ground_state(build_hamiltonian(20, -5.0))
        self.assertGreater(fidelity(polar, state_polar(20)), 0.99)
        self.assertGreater(fidelity(tf, state_twin_fock(20)), 0.99)

    def test_sign_convention_and_energy(self):
        H = build_hamiltonian(30, 0.4)
        E0, s = ground_state(H)
        i = int(np.argmax(np.abs(s.c)))
        self.assertGreater(s.c[i].real, 0.0)
        self.assertAlmostEqual(expectation(H, s), E0, places=10)
        self.assertAlmostEqual(E0, eigh(H.dense(), eigvals_only=True)[0], places=10)

    def test_apply_and_gershgorin(self):
        H = build_hamiltonian(40, -0.3)
        v = np.random.default_rng(3).normal(size=H.dim)
        np.testing.assert_allclose(tridiagonal_apply(H.diag, H.offdiag, v), H.dense() @ v, atol=1e-12)
        lo, hi = H.gershgorin_bounds()
        w = spectrum(40, -0.3)
        self.assertLessEqual(lo, w[0])
        self.assertGreaterEqual(hi, w[-1])


if __name__ == "__main__":
    unittest.main()
