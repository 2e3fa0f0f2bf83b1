# verification.py
"""Oracle and identity checks behind the `verify` command."""
from __future__ import annotations

import logging
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np

from cba import cba_coefficients, exact_qfi, pairing_identity, recursion_holds, wick_factor
from decomposition import conditional_qfi, conditional_state, decomposition_identity, h_number_distribution, to_gh_basis
from dynamics import PropagatorConfig, RampSchedule, evolve_ramp, retained_fraction
from errors import IdentityViolation
from estimation import classical_fisher, optimality_residual, peak_fisher, rotate_and_distribute, sigma_max
from fockspace import SpinorState, fidelity, state_twin_fock
from fullspace import full_space
from hamiltonian import build_hamiltonian, ground_state, spectral_gap
from metrology import covariance_matrix, full_space_covariance, qfi_optimal
from parametric import (QuadraticModel, bogoliubov_window, compare_with_exact, generating_function, qfi_analytic,
                        resonance_q)
from reporter import CheckResult

logger = logging.getLogger("SpinorMetrology")


def _input_state(kind: str, N: int) -> SpinorState:
    return cba_coefficients(N) if kind == "cba" else state_twin_fock(N)


def check_exact_qfi() -> List[CheckResult]:
    out = []
    for N in (2, 10, 100, 500, 2000):
        for kind in ("tf", "cba"):
            got = qfi_optimal(_input_state(kind, N)).qfi
            ref = exact_qfi(kind, N)
            rel = abs(got - ref) / ref
            out.append(CheckResult(f"qfi_optimal {kind} N={N}", got, ref, rel <= 1e-9, f"relative error {rel:.3g}"))
    return out


def check_ground_state() -> List[CheckResult]:
    out = []
    for N in (2, 50, 500):
        _, s = ground_state(build_hamiltonian(N, 0.0))
        err = float(np.max(np.abs(s.c - cba_coefficients(N).c)))
        out.append(CheckResult(f"q=0 ground state is CBA N={N}", err, 0.0, err <= 1e-10))
    return out


def single_mode_contraction_error(N: int) -> float:
    """max |<n|(a + a^dagger)^N|0> - sqrt(n!) X(N, (N-n)/2)| in a truncated Fock space."""
    dim = N + 2
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    x = a + a.T
    vec = np.zeros(dim)
    vec[0] = 1.0
    for _ in range(N):
        vec = x @ vec
    err = 0.0
    for n in range(N + 1):
        expected = 0.0
        if (N - n) % 2 == 0:
            expected = math.sqrt(math.factorial(n)) * float(wick_factor(N, (N - n) // 2))
        err = max(err, abs(vec[n] - expected) / max(1.0, abs(expected)))
    return err


def check_combinatorics() -> List[CheckResult]:
    failures = 0
    for m in range(31):
        for n in range(2 * m + 1):
            try:
                pairing_identity(n, m)
            except IdentityViolation as e:
                logger.error(str(e))
                failures += 1
    out = [CheckResult("pairing identity m<=30", float(failures), 0.0, failures == 0)]
    worst = max(single_mode_contraction_error(N) for N in range(13))
    out.append(CheckResult("single-mode Wick factors N<=12", worst, 0.0, worst <= 1e-12))
    bad = [N for N in range(2, 41) if not recursion_holds(N)]
    out.append(CheckResult("CBA coefficient recursion N<=40", float(len(bad)), 0.0, not bad,
                           f"fails for N={bad}" if bad else ""))
    return out


def check_operator_identity() -> List[CheckResult]:
    worst = 0.0
    for N in range(2, 7):
        space = full_space(N)
        for q in (0.0, 0.7, -1.3):
            diff = space.hamiltonian(q) - space.lmg_form(q)
            shift = np.trace(diff).real / space.dim
            worst = max(worst, float(np.max(np.abs(diff - shift * np.eye(space.dim)))))
    return [CheckResult("pseudospin form differs by a constant N<=6", worst, 0.0, worst <= 1e-10)]


def random_state(N: int, rng: np.random.Generator) -> SpinorState:
    c = rng.normal(size=N // 2 + 1) + 1j * rng.normal(size=N // 2 + 1)
    return SpinorState(N, c / np.linalg.norm(c))


def check_covariance(samples: int = 100, seed: int = 12345) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        s = random_state(int(rng.integers(2, 11)), rng)
        worst = max(worst, float(np.max(np.abs(covariance_matrix(s).full() - full_space_covariance(s)))))
    return [CheckResult(f"closed-form covariance vs oracle ({samples} states)", worst, 0.0, worst <= 1e-10)]


def check_measurement() -> List[CheckResult]:
    out = []
    N = 100
    for kind in ("tf", "cba"):
        ref = exact_qfi(kind, N)
        worst = max(abs(classical_fisher(rotate_and_distribute(kind, N, th)) - ref) / ref for th in (0.05, 0.3, 1.0))
        out.append(CheckResult(f"D-count Fisher = QFI {kind} N={N}", worst, 0.0, worst <= 1e-6))
    residual = max(
        optimality_residual(kind, N, th)
        for kind in ("tf", "cba") for N in (2, 4, 6) for th in (0.05, 0.3, 1.0)
    )
    out.append(CheckResult("optimality residual N<=6", residual, 0.0, residual <= 1e-10))
    return out


def check_decomposition() -> List[CheckResult]:
    lhs, rhs = decomposition_identity(cba_coefficients(500))
    rel = abs(lhs - rhs) / lhs
    out = [CheckResult("sector decomposition N=500", rhs, lhs, rel <= 1e-8)]
    g = to_gh_basis(cba_coefficients(2))
    P = h_number_distribution(g)
    cq = conditional_qfi(conditional_state(g, 0))
    ok = abs(P[0] - 5 / 6) <= 1e-12 and abs(P[2] - 1 / 6) <= 1e-12 and abs(cq - 18 / 5) <= 1e-12
    out.append(CheckResult("N=2 sector chain", cq, 18 / 5, ok, f"P={P.tolist()}"))
    return out


def check_parametric() -> List[CheckResult]:
    worst_res = 0.0
    for N in (2, 50, 500):
        model = QuadraticModel.from_system(N, resonance_q(N))
        for t in (0.5, 1.0, 2.0, 5.0):
            value, _ = qfi_analytic(model, t)
            ref = math.exp(2.0 * abs(model.beta) * t)
            worst_res = max(worst_res, abs(value - ref) / ref)
    worst_gen = 0.0
    for c in (0.1, 0.5, 0.9, 0.95):
        total, closed = generating_function(c)
        worst_gen = max(worst_gen, abs(total - closed) / closed)
    return [
        CheckResult("resonant analytic law is exp(2|beta|t)", worst_res, 0.0, worst_res <= 1e-12),
        CheckResult("pair generating function |c|<=0.95", worst_gen, 0.0, worst_gen <= 1e-10),
    ]


def gap_exponent(sizes=(128, 256, 512, 1024, 2048), q: float = 1.0) -> float:
    gaps = [spectral_gap(N, q) for N in sizes]
    return float(np.polyfit(np.log(sizes), np.log(gaps), 1)[0])


def check_gap_scaling() -> List[CheckResult]:
    slope = gap_exponent()
    return [CheckResult("critical gap exponent", slope, -1 / 3, abs(slope + 1 / 3) <= 0.05)]


# The sigma^-2 law holds once the kernel is wider than the outcome spacing;
# at sigma = 1/2 the peak still sits near the noiseless value.
NOISE_FIT_SIGMAS = (1.0, 1.5, 2.0, 3.0, 4.0, 5.0)


def peak_curve(kind: str, N: int, sigmas: Sequence[float]) -> np.ndarray:
    return np.array([peak_fisher(kind, N, float(s))[1] for s in sigmas])


def log_log_slopes(sigmas: Sequence[float], peaks: Sequence[float]) -> Tuple[float, np.ndarray]:
    """Least-squares slope of log F against log sigma, and the slope between neighbouring points."""
    x = np.log(np.asarray(sigmas, dtype=float))
    y = np.log(np.asarray(peaks, dtype=float))
    return float(np.polyfit(x, y, 1)[0]), np.diff(y) / np.diff(x)


def peak_slope(kind: str, N: int, sigmas: Sequence[float] = NOISE_FIT_SIGMAS) -> float:
    return log_log_slopes(sigmas, peak_curve(kind, N, sigmas))[0]


def check_noise(N: int = 500, sigmas: Sequence[float] = NOISE_FIT_SIGMAS) -> List[CheckResult]:
    out = []
    for kind, ref in (("tf", 0.4), ("cba", 0.2)):
        value = sigma_max(kind, N) / math.sqrt(N)
        out.append(CheckResult(f"sigma_max/sqrt(N) {kind} N={N}", value, ref, abs(value - ref) <= 0.05))
    peaks = peak_curve("tf", N, sigmas)
    fit, pairs = log_log_slopes(sigmas, peaks)
    out.append(CheckResult(f"peak Fisher noise slope tf N={N}", fit, -2.0, abs(fit + 2.0) <= 0.2,
                           "pairwise " + ", ".join(f"{s:.3f}" for s in pairs)))
    out.append(CheckResult(f"peak Fisher falls with every noise step tf N={N}", float(np.max(pairs)), 0.0,
                           bool(np.all(pairs < 0))))
    return out


def check_ramp(N: int = 500, Q: float = 0.1) -> List[CheckResult]:
    schedule = RampSchedule(Q=Q)
    traj = evolve_ramp(N, schedule, samples=2, directions=("Sx",))
    kept = retained_fraction(traj, "Sx", "cba")
    out = [CheckResult(f"ramp Q={Q:g} retains Sx QFI N={N}", kept, 0.85, kept >= 0.85)]
    halved = evolve_ramp(N, schedule, PropagatorConfig(dt=traj.dt / 2), samples=2, directions=("Sx",))
    change = 1.0 - fidelity(traj.final_state, halved.final_state)
    out.append(CheckResult(f"ramp step halving N={N}", change, 0.0, change < 1e-8, f"dt={traj.dt:.4g}"))
    slow = evolve_ramp(20, RampSchedule(Q=0.001), PropagatorConfig(dt=0.5), samples=2,
                       directions=("Sx",), initial="ground")
    fid = float(slow.fidelity[-1])
    out.append(CheckResult("slow ramp fidelity N=20", fid, 0.999, fid > 0.999))
    return out


def check_quench(N: int = 500, t_final: float = 30.0, samples: int = 301) -> List[CheckResult]:
    rows = compare_with_exact(N, np.linspace(0.0, t_final, samples))
    window = bogoliubov_window(rows, N)
    worst = max(r["relative_deviation"] for r in window)
    peak = max(r["fq_exact_over_n2"] for r in rows)
    # optimal rotation of the Twin-Fock state, per N^2
    ceiling = exact_qfi("tf", N) / N ** 2
    return [
        CheckResult(f"quadratic model while pairs < 0.01N, N={N}", worst, 0.0, worst < 0.05,
                    f"{len(window)} of {len(rows)} samples, t <= {window[-1]['t']:.4g}"),
        CheckResult(f"long-time max F_Q/N^2 stays below Twin-Fock N={N}", peak, ceiling, peak < ceiling),
    ]


QUICK_CHECKS: List[Callable[[], List[CheckResult]]] = [
    check_exact_qfi,
    check_ground_state,
    check_combinatorics,
    check_operator_identity,
    check_covariance,
    check_measurement,
    check_decomposition,
    check_parametric,
    check_gap_scaling,
]

SLOW_CHECKS: List[Callable[[], List[CheckResult]]] = [check_noise, check_ramp, check_quench]


def run_checks(full: bool = False) -> List[CheckResult]:
    results: List[CheckResult] = []
    for check in QUICK_CHECKS + (SLOW_CHECKS if full else []):
        logger.info(f"Running {check.__name__}...")
        results.extend(check())
    return results
