import unittest

import numpy as np
from scipy.linalg import expm

from dynamics import (PropagatorConfig, RampSchedule, conversion_efficiency, evolve_quench, evolve_ramp,
                      ramp_retention, retained_fraction, retention_target)
from errors import PropagationError, SpinorInputError
from fockspace import fidelity, state_polar
from hamiltonian import build_hamiltonian


class TestSchedules(unittest.TestCase):
    def test_ramp_schedule(self):
        sched = RampSchedule(Q=0.5)
        self.assertAlmostEqual(sched.t_end, 12.0)
        self.assertAlmostEqual(float(sched.q_at(0.0)), 1.5)
        self.assertAlmostEqual(float(sched.q_at(sched.t_end)), 0.0)
        with self.assertRaises(SpinorInputError):
            RampSchedule(Q=0.0)
        with self.assertRaises(SpinorInputError):
            RampSchedule(Q=0.1, q_end=2.0)

    def test_propagator_config_validation(self):
        with self.assertRaises(SpinorInputError):
            PropagatorConfig(method="euler")
        with self.assertRaises(SpinorInputError):
            PropagatorConfig(dt=-1.0)

    def test_retention_targets(self):
        self.assertEqual(retention_target(0.0), ("cba", "Sx"))
        self.assertEqual(retention_target(-2.0), ("tf", "Jx"))


class TestQuench(unittest.TestCase):
    def test_constant_q_matches_dense_exponential(self):
        N, q, t = 10, 0.3, 2.0
        traj = evolve_quench(N, q, t, samples=3)
        H = build_hamiltonian(N, q).dense()
        exact = expm(-1j * t * H) @ state_polar(N).c
        np.testing.assert_allclose(traj.final_state.c, exact, atol=1e-9)
        np.testing.assert_allclose(traj.times, [0.0, 1.0, 2.0])

    def test_energy_is_conserved(self):
        traj = evolve_quench(40, 0.45, 5.0, samples=11)
        np.testing.assert_allclose(traj.energy, traj.energy[0], atol=1e-9)
        self.assertLess(traj.max_norm_drift, 1e-8)

    def test_methods_agree(self):
        N, q = 20, 0.4875
        ref = evolve_quench(N, q, 3.0, PropagatorConfig(method="chebyshev"), samples=4).final_state
        lanczos = evolve_quench(N, q, 3.0, PropagatorConfig(method="krylov_expm"), samples=4).final_state
        adaptive = evolve_quench(N, q, 3.0, PropagatorConfig(method="rk_adaptive"), samples=4).final_state
        self.assertGreater(fidelity(ref, lanczos), 1 - 1e-9)
        self.assertGreater(fidelity(ref, adaptive), 1 - 1e-7)

    def test_explicit_times_skip_the_origin(self):
        traj = evolve_quench(10, 0.5, 0.0, times=[0.5, 1.0])
        np.testing.assert_allclose(traj.times, [0.5, 1.0])
        self.assertEqual(len(traj.states), 2)
        self.assertEqual(traj.qfi["Sx"].shape, (2,))
        with self.assertRaises(SpinorInputError):
            evolve_quench(10, 0.5, 0.0, times=[1.0, 0.5])

    def test_starts_from_polar_state(self):
        traj = evolve_quench(12, 0.5, 1.0, samples=3)
        self.assertAlmostEqual(conversion_efficiency(traj)[0], 0.0)
        self.assertAlmostEqual(traj.qfi["block4"][0], 12.0)

    def test_krylov_failure_reports_diagnostics(self):
        settings = PropagatorConfig(method="krylov_expm", dt=50.0)
        with self.assertRaises(PropagationError) as ctx:
            evolve_quench(200, 0.5, 100.0, settings, samples=2)
        self.assertIn("tau", ctx.exception.diagnostics)


class TestRamp(unittest.TestCase):
    def test_slow_ramp_from_ground_state_is_adiabatic(self):
        traj = evolve_ramp(10, RampSchedule(Q=0.002), PropagatorConfig(dt=1.0), samples=2,
                           directions=("Sx",), initial="ground")
        self.assertGreater(float(traj.fidelity[-1]), 0.999)
        self.assertGreater(retained_fraction(traj, "Sx", "cba"), 0.98)

    def test_polar_start_is_default(self):
        sched = RampSchedule(Q=1.0)
        polar = evolve_ramp(6, sched, samples=2)
        self.assertAlmostEqual(float(polar.states[0].c[0].real), 1.0)
        ground = evolve_ramp(6, sched, samples=2, initial="ground")
        self.assertLess(float(polar.fidelity[0]), 0.999)
        self.assertAlmostEqual(float(ground.fidelity[0]), 1.0, places=10)
        with self.assertRaises(SpinorInputError):
            evolve_ramp(6, sched, initial="twin")

    def test_step_halving_converges(self):
        sched = RampSchedule(Q=0.5)
        coarse = evolve_ramp(10, sched, PropagatorConfig(dt=0.01), samples=2)
        fine = evolve_ramp(10, sched, PropagatorConfig(dt=0.005), samples=2)
        self.assertGreater(fidelity(coarse.final_state, fine.final_state), 1 - 1e-8)

    def test_retention_point(self):
        point = ramp_retention(10, 1.0)
        self.assertEqual(point["Q"], 1.0)
        self.assertAlmostEqual(point["t_end"], 6.0)
        self.assertGreater(point["retained"], 0.0)
        self.assertLessEqual(point["final_fidelity"], 1.0)


if __name__ == "__main__":
    unittest.main()
