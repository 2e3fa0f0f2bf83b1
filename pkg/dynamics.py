# dynamics.py
"""Time evolution inside the D=0 subspace (hbar = q_c = 1).

Time-dependent ramps use the fourth-order commutator-free Magnus scheme:
two exponentials per step, each of H at an effective q because H is
linear in q. Each exponential acts on the vector only (Chebyshev series
or Lanczos), so a step costs O(dim) per matrix-vector product.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.special import jv

import config
from cba import check_kind, exact_qfi
from errors import PropagationError, SpinorInputError
from fockspace import SpinorState, fidelity, mean_side_population, renormalize, state_polar, validate_system_size
from hamiltonian import build_hamiltonian, expectation, ground_state, hamiltonian_parts, tridiagonal_apply
from metrology import NAMED_DIRECTIONS, covariance_matrix

logger = logging.getLogger("SpinorMetrology")

METHODS = ("chebyshev", "krylov_expm", "rk_adaptive")
INITIAL_STATES = ("polar", "ground")

_SQ3 = math.sqrt(3.0)
CF4_WEIGHTS = ((3.0 - 2.0 * _SQ3) / 12.0, (3.0 + 2.0 * _SQ3) / 12.0)
CF4_NODES = (0.5 - _SQ3 / 6.0, 0.5 + _SQ3 / 6.0)

Observable = Callable[[SpinorState], float]


@dataclass(frozen=True)
class RampSchedule:
    Q: float
    q_end: float = 0.0
    q_start: float = 1.5

    def __post_init__(self):
        if not self.Q > 0:
            raise SpinorInputError(f"Ramp parameter Q must be positive, got {self.Q}.")
        if not self.q_end < self.q_start:
            raise SpinorInputError(f"Ramp must decrease q: q_end={self.q_end} >= q_start={self.q_start}.")

    def q_at(self, t):
        return self.q_start - self.Q * np.asarray(t) / 4.0

    @property
    def t_end(self) -> float:
        return 4.0 * (self.q_start - self.q_end) / self.Q


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = field(default_factory=lambda: config.PROPAGATOR_METHOD)
    dt: Optional[float] = None
    tolerance: float = field(default_factory=lambda: config.LOCAL_TOLERANCE)
    norm_budget: float = field(default_factory=lambda: config.NORM_DRIFT_BUDGET)
    step_safety: float = field(default_factory=lambda: config.STEP_SAFETY)

    def __post_init__(self):
        if self.method not in METHODS:
            raise SpinorInputError(f"Unknown propagator '{self.method}'; choose from {METHODS}.")
        if self.dt is not None and not self.dt > 0:
            raise SpinorInputError(f"Time step must be positive, got {self.dt}.")
        if not self.tolerance > 0 or not self.norm_budget > 0 or not self.step_safety > 0:
            raise SpinorInputError("Tolerances and step safety must be positive.")


@dataclass
class Trajectory:
    N: int
    times: np.ndarray
    q: np.ndarray
    states: List[SpinorState]
    qfi: Dict[str, np.ndarray]
    fidelity: np.ndarray
    energy: np.ndarray
    extras: Dict[str, np.ndarray] = field(default_factory=dict)
    method: str = ""
    dt: float = 0.0
    max_norm_drift: float = 0.0

    @property
    def final_state(self) -> SpinorState:
        return self.states[-1]


def _chebyshev_coefficients(x: float, cutoff: float = 1e-16) -> np.ndarray:
    # Bessel coefficients of exp(-i x y) on [-1, 1]; J_k(x) decays super-exponentially for k > x.
    kmax = int(x + 10.0 * max(x, 1.0) ** (1.0 / 3.0) + 30)
    k = np.arange(kmax + 1)
    coeffs = jv(k, x) * (-1j) ** k
    coeffs[1:] *= 2.0
    keep = np.nonzero(np.abs(coeffs) > cutoff)[0]
    last = int(keep[-1]) + 1 if keep.size else 1
    return coeffs[: max(last, 2)]


def _lanczos_expm(d: np.ndarray, e: np.ndarray, psi: np.ndarray, tau: float, tol: float,
                  max_dim: int = 60) -> np.ndarray:
    beta0 = float(np.linalg.norm(psi))
    if beta0 == 0.0:
        return psi.copy()
    basis = [psi / beta0]
    alphas: List[float] = []
    betas: List[float] = []
    y = np.array([1.0 + 0j])
    for j in range(min(max_dim, d.shape[0])):
        w = tridiagonal_apply(d, e, basis[j])
        alpha = float(np.vdot(basis[j], w).real)
        w = w - alpha * basis[j]
        if j > 0:
            w = w - betas[-1] * basis[j - 1]
        # full reorthogonalization keeps the small Krylov basis orthonormal
        for v in basis:
            w = w - np.vdot(v, w) * v
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if len(alphas) == 1:
            theta, vecs = np.array(alphas), np.ones((1, 1))
        else:
            theta, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas))
        y = vecs @ (np.exp(-1j * tau * theta) * vecs[0, :])
        if beta < 1e-14 or beta * abs(y[-1]) < tol:
            break
        betas.append(beta)
        basis.append(w / beta)
    else:
        raise PropagationError("Lanczos exponential did not converge", tau=tau, krylov_dim=len(alphas))
    return beta0 * (np.array(basis[: len(y)]).T @ y)


class Propagator:
    """Advances D=0 amplitudes under H(q(t)) with one of the configured kernels."""

    def __init__(self, N: int, q_min: float, q_max: float, settings: PropagatorConfig):
        self.N = validate_system_size(N)
        self.settings = settings
        self.diag0, self.diag_q, self.offdiag = hamiltonian_parts(N)
        self.lo, self.hi = self._bounds(q_min, q_max)
        radius = max(abs(self.lo), abs(self.hi), 1e-12)
        self.dt = settings.dt if settings.dt is not None else settings.step_safety / radius
        self._cheb_cache: Dict[float, np.ndarray] = {}

    def _bounds(self, q_min: float, q_max: float) -> Tuple[float, float]:
        lows, highs = [], []
        for q in (q_min, q_max):
            d = self.diag0 + q * self.diag_q
            r = np.zeros_like(d)
            r[:-1] += np.abs(self.offdiag)
            r[1:] += np.abs(self.offdiag)
            lows.append(float(np.min(d - r)))
            highs.append(float(np.max(d + r)))
        lo, hi = min(lows), max(highs)
        margin = 1e-3 + 0.01 * (hi - lo)
        return lo - margin, hi + margin

    def diag(self, q: float) -> np.ndarray:
        return self.diag0 + q * self.diag_q

    def exp_apply(self, psi: np.ndarray, q: float, tau: float) -> np.ndarray:
        """exp(-i tau H(q)) psi."""
        if self.settings.method == "krylov_expm":
            return _lanczos_expm(self.diag(q), self.offdiag, psi, tau, self.settings.tolerance)
        center = 0.5 * (self.hi + self.lo)
        radius = 0.5 * (self.hi - self.lo)
        x = radius * tau
        coeffs = self._cheb_cache.get(x)
        if coeffs is None:
            coeffs = _chebyshev_coefficients(x)
            self._cheb_cache[x] = coeffs
        dn = (self.diag(q) - center) / radius
        en = self.offdiag / radius
        prev = psi
        cur = tridiagonal_apply(dn, en, psi)
        out = coeffs[0] * prev + coeffs[1] * cur
        for c in coeffs[2:]:
            nxt = 2.0 * tridiagonal_apply(dn, en, cur) - prev
            out += c * nxt
            prev, cur = cur, nxt
        return np.exp(-1j * center * tau) * out

    def step(self, psi: np.ndarray, t: float, h: float, q_of_t: Callable[[float], float]) -> np.ndarray:
        a1, a2 = CF4_WEIGHTS
        q1 = float(q_of_t(t + CF4_NODES[0] * h))
        q2 = float(q_of_t(t + CF4_NODES[1] * h))
        if q1 == q2:
            return self.exp_apply(psi, q1, h)
        psi = self.exp_apply(psi, 2.0 * (a2 * q1 + a1 * q2), 0.5 * h)
        return self.exp_apply(psi, 2.0 * (a1 * q1 + a2 * q2), 0.5 * h)

    def advance(self, psi: np.ndarray, t0: float, t1: float, q_of_t: Callable[[float], float]) -> np.ndarray:
        span = t1 - t0
        if span <= 0:
            return psi
        n = max(1, int(math.ceil(span / self.dt - 1e-12)))
        h = span / n
        for i in range(n):
            psi = self.step(psi, t0 + i * h, h, q_of_t)
        return psi

    def solve_adaptive(self, psi0: np.ndarray, times: np.ndarray,
                       q_of_t: Callable[[float], float]) -> List[np.ndarray]:
        def rhs(t, y):
            return -1j * tridiagonal_apply(self.diag(float(q_of_t(t))), self.offdiag, y)

        sol = solve_ivp(
            rhs, (float(times[0]), float(times[-1])), psi0.astype(np.complex128),
            method="DOP853", t_eval=times, rtol=self.settings.tolerance,
            atol=self.settings.tolerance * 1e-2,
        )
        if not sol.success:
            raise PropagationError("Adaptive integrator failed", message=sol.message, method="rk_adaptive")
        return [sol.y[:, i] for i in range(sol.y.shape[1])]


def _propagate(N: int, times: np.ndarray, q_of_t: Callable[[float], float], q_min: float, q_max: float,
               settings: PropagatorConfig, initial: Optional[SpinorState] = None) -> Tuple[List[SpinorState], float, float]:
    prop = Propagator(N, q_min, q_max, settings)
    psi = (state_polar(N) if initial is None else initial).c.copy()
    logger.info(
        f"Propagating N={N} over t=[{times[0]:.4g}, {times[-1]:.4g}] "
        f"with {settings.method} (dt={prop.dt:.3g})"
    )
    if settings.method == "rk_adaptive":
        raw = prop.solve_adaptive(psi, times, q_of_t)
    else:
        raw = [psi]
        for t0, t1 in zip(times[:-1], times[1:]):
            psi = prop.advance(psi, float(t0), float(t1), q_of_t)
            raw.append(psi)

    states: List[SpinorState] = []
    max_drift = 0.0
    for t, vec in zip(times, raw):
        drift = abs(float(np.linalg.norm(vec)) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > settings.norm_budget:
            raise PropagationError(
                "Norm drift exceeded budget", t=float(t), drift=drift,
                budget=settings.norm_budget, method=settings.method, dt=prop.dt,
            )
        state, _ = renormalize(N, vec)
        states.append(state)
    return states, max_drift, prop.dt


def _sample_times(t_end: float, samples: int) -> np.ndarray:
    if samples < 2:
        raise SpinorInputError(f"Need at least two samples, got {samples}.")
    return np.linspace(0.0, t_end, samples)


def _observe(N: int, times: np.ndarray, q: np.ndarray, states: List[SpinorState],
             directions: Sequence[str], observables: Optional[Mapping[str, Observable]]) -> Trajectory:
    qfi = {name: np.empty(len(states)) for name in directions}
    qfi["block4"] = np.empty(len(states))
    qfi["optimal"] = np.empty(len(states))
    fid = np.empty(len(states))
    energy = np.empty(len(states))
    extras = {name: np.empty(len(states)) for name in (observables or {})}
    ground_cache: Dict[float, SpinorState] = {}
    for i, s in enumerate(states):
        cov = covariance_matrix(s)
        gamma = cov.full()
        for name in directions:
            u = NAMED_DIRECTIONS[name]
            qfi[name][i] = 4.0 * float(u @ gamma @ u)
        qfi["block4"][i] = 4.0 * cov.lambda_plus
        qfi["optimal"][i] = 4.0 * max(cov.eigenvalues.values())
        qi = float(q[i])
        if qi not in ground_cache:
            ground_cache[qi] = ground_state(build_hamiltonian(N, qi))[1]
        fid[i] = fidelity(s, ground_cache[qi])
        energy[i] = expectation(build_hamiltonian(N, qi), s)
        for name, fn in (observables or {}).items():
            extras[name][i] = fn(s)
    return Trajectory(N=N, times=times, q=q, states=states, qfi=qfi, fidelity=fid, energy=energy, extras=extras)


def evolve_ramp(N: int, schedule: RampSchedule, settings: Optional[PropagatorConfig] = None,
                samples: int = 201, directions: Sequence[str] = ("Sx", "Jx"),
                observables: Optional[Mapping[str, Observable]] = None, initial: str = "polar") -> Trajectory:
    """Ramp from |k=0> (initial="polar") or from the ground state at q_start (initial="ground")."""
    N = validate_system_size(N)
    settings = settings or PropagatorConfig()
    if initial not in INITIAL_STATES:
        raise SpinorInputError(f"Unknown initial state '{initial}'; choose from {INITIAL_STATES}.")
    psi0 = ground_state(build_hamiltonian(N, schedule.q_start))[1] if initial == "ground" else None
    times = _sample_times(schedule.t_end, samples)
    q_of_t = schedule.q_at
    states, drift, dt = _propagate(N, times, q_of_t, schedule.q_end, schedule.q_start, settings, psi0)
    traj = _observe(N, times, np.asarray(q_of_t(times), dtype=float), states, directions, observables)
    traj.method, traj.dt, traj.max_norm_drift = settings.method, dt, drift
    return traj


def evolve_quench(N: int, q: float, t_final: float, settings: Optional[PropagatorConfig] = None,
                  samples: int = 301, times: Optional[Sequence[float]] = None,
                  directions: Sequence[str] = ("Sx", "Jx"),
                  observables: Optional[Mapping[str, Observable]] = None) -> Trajectory:
    N = validate_system_size(N)
    settings = settings or PropagatorConfig()
    if times is None:
        if not t_final > 0:
            raise SpinorInputError(f"t_final must be positive, got {t_final}.")
        grid = _sample_times(t_final, samples)
    else:
        grid = np.asarray(times, dtype=float)
        if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
            raise SpinorInputError("Quench sample times must be non-negative and strictly increasing.")
        if grid[0] > 0:
            grid = np.concatenate(([0.0], grid))

    def q_of_t(_t):
        return q

    states, drift, dt = _propagate(N, grid, q_of_t, q, q, settings)
    traj = _observe(N, grid, np.full(grid.shape, float(q)), states, directions, observables)
    traj.method, traj.dt, traj.max_norm_drift = settings.method, dt, drift
    if times is not None and float(np.asarray(times, dtype=float)[0]) > 0:
        _drop_first(traj)
    return traj


def _drop_first(traj: Trajectory) -> None:
    traj.times = traj.times[1:]
    traj.q = traj.q[1:]
    traj.states = traj.states[1:]
    traj.fidelity = traj.fidelity[1:]
    traj.energy = traj.energy[1:]
    traj.qfi = {k: v[1:] for k, v in traj.qfi.items()}
    traj.extras = {k: v[1:] for k, v in traj.extras.items()}


def conversion_efficiency(traj: Trajectory) -> np.ndarray:
    """<N+ + N->/N per sample."""
    return np.array([2.0 * mean_side_population(s) / traj.N for s in traj.states])


def retained_fraction(traj: Trajectory, direction: str = "Sx", target: str = "cba") -> float:
    """Final QFI along a direction relative to the exact QFI of the target state."""
    target = check_kind(target)
    return float(traj.qfi[direction][-1]) / exact_qfi(target, traj.N)


def retention_target(q_end: float) -> Tuple[str, str]:
    """(target state, pseudospin direction) a ramp ending at q_end is compared with."""
    return ("tf", "Jx") if q_end <= -1.0 else ("cba", "Sx")


def ramp_retention(N: int, Q: float, q_end: float = 0.0,
                   settings: Optional[PropagatorConfig] = None) -> Dict[str, float]:
    """One point of the finite-speed retention map."""
    schedule = RampSchedule(Q=Q, q_end=q_end)
    target, direction = retention_target(q_end)
    traj = evolve_ramp(N, schedule, settings, samples=2)
    return {
        "N": float(N),
        "Q": float(Q),
        "q_end": float(q_end),
        "t_end": schedule.t_end,
        "retained": retained_fraction(traj, direction, target),
        "final_fidelity": float(traj.fidelity[-1]),
        "final_conversion": float(conversion_efficiency(traj)[-1]),
    }
