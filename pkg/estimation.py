# estimation.py
"""Classical Fisher information of a D measurement after the optimal rotation.

Both input states sit at m=0 of a single angular-momentum multiplet, so the
rotation reduces to exp(-i theta_eff Jx) on 2j+1 amplitudes:
  cba: j = N, D = -m, theta_eff = theta/2 (Sx = Lx/2)
  tf:  j = N/2, D = 2m, theta_eff = theta
Derivatives of P(D|theta) are analytic, from da/dtheta = -i scale Jx a.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.optimize import bisect, minimize_scalar
from scipy.sparse.linalg import expm_multiply
from scipy.special import comb, eval_jacobi

import config
from cba import cba_coefficients, check_kind
from errors import SpinorInputError
from fockspace import require_even, state_twin_fock, validate_system_size
from fullspace import check_oracle_size, full_space

logger = logging.getLogger("SpinorMetrology")


@dataclass(frozen=True)
class SpinMultiplet:
    kind: str
    N: int
    j: int
    angle_scale: float

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.j, self.j + 1)

    @property
    def outcomes(self) -> np.ndarray:
        return -self.m if self.kind == "cba" else 2 * self.m

    def initial(self) -> np.ndarray:
        a = np.zeros(2 * self.j + 1, dtype=np.complex128)
        a[self.j] = 1.0
        return a

    def jx(self) -> sparse.csr_matrix:
        return spin_x(self.j)


def multiplet(kind: str, N: int) -> SpinMultiplet:
    kind = check_kind(kind)
    if kind == "tf":
        N = require_even(N)
        return SpinMultiplet("tf", N, N // 2, 1.0)
    N = validate_system_size(N)
    return SpinMultiplet("cba", N, N, 0.5)


@lru_cache(maxsize=16)
def spin_x(j: int) -> sparse.csr_matrix:
    m = np.arange(-j, j)
    off = 0.5 * np.sqrt(j * (j + 1) - m * (m + 1.0))
    return sparse.diags([off, off], [-1, 1], format="csr")


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """P(D|theta) and dP/dtheta over D = -N..N."""
    theta: float
    N: int
    P: np.ndarray
    dP: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise SpinorInputError(f"Noise width must be non-negative, got {self.sigma}.")


def _rotated_amplitudes(mult: SpinMultiplet, theta: float) -> np.ndarray:
    gen = (-1j * mult.angle_scale * theta) * mult.jx()
    return expm_multiply(gen, mult.initial())


@lru_cache(maxsize=4096)
def _distribution_arrays(kind: str, N: int, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    mult = multiplet(kind, N)
    a = _rotated_amplitudes(mult, theta)
    da = -1j * mult.angle_scale * (mult.jx() @ a)
    probs = np.abs(a) ** 2
    dprobs = 2.0 * np.real(np.conj(a) * da)
    P = np.zeros(2 * N + 1)
    dP = np.zeros(2 * N + 1)
    idx = mult.outcomes + N
    P[idx] = probs
    dP[idx] = dprobs
    P.setflags(write=False)
    dP.setflags(write=False)
    return P, dP


def rotate_and_distribute(kind: str, N: int, theta: float) -> OutcomeDistribution:
    P, dP = _distribution_arrays(check_kind(kind), int(N), float(theta))
    return OutcomeDistribution(float(theta), int(N), P, dP)


def singular_outcomes(dist: OutcomeDistribution, floor: Optional[float] = None) -> np.ndarray:
    floor = config.PROBABILITY_FLOOR if floor is None else floor
    return np.nonzero((dist.P < floor) & (np.abs(dist.dP) > config.SINGULAR_DP_THRESHOLD))[0]


def classical_fisher(dist: OutcomeDistribution, floor: Optional[float] = None) -> float:
    floor = config.PROBABILITY_FLOOR if floor is None else floor
    mask = dist.P >= floor
    value = float(np.sum(dist.dP[mask] ** 2 / dist.P[mask]))
    bad = singular_outcomes(dist, floor)
    if bad.size:
        logger.warning(
            f"Fisher information at theta={dist.theta:.6g} skipped {bad.size} outcome(s) "
            f"with vanishing probability but |dP| > {config.SINGULAR_DP_THRESHOLD:g}"
        )
    return value


# Below this width exp(-1/(4 sigma^2)) underflows, so the kernel is exactly the identity.
NOISELESS_SIGMA = 0.01


@lru_cache(maxsize=8)
def _noise_kernel(N: int, sigma: float) -> np.ndarray:
    if sigma < NOISELESS_SIGMA:
        K = np.eye(2 * N + 1)
        K.setflags(write=False)
        return K
    D = np.arange(-N, N + 1)
    diff = D[:, None] - D[None, :]
    K = np.exp(-(diff ** 2) / (4.0 * sigma ** 2))
    # each source outcome spreads to unit total weight inside the window
    K /= K.sum(axis=0, keepdims=True)
    K.setflags(write=False)
    return K


def apply_detection_noise(dist: OutcomeDistribution, noise: NoiseModel) -> OutcomeDistribution:
    if noise.sigma < NOISELESS_SIGMA:
        return dist
    K = _noise_kernel(dist.N, float(noise.sigma))
    return OutcomeDistribution(dist.theta, dist.N, K @ dist.P, K @ dist.dP)


def fisher_at(kind: str, N: int, theta: float, sigma: float = 0.0) -> float:
    dist = apply_detection_noise(rotate_and_distribute(kind, N, theta), NoiseModel(sigma))
    return classical_fisher(dist)


def default_theta_grid(points: Optional[int] = None, theta_min: Optional[float] = None) -> np.ndarray:
    points = points or config.SWEEP_DEFAULTS.theta_points
    theta_min = theta_min or config.SWEEP_DEFAULTS.theta_min
    return np.geomspace(theta_min, math.pi / 2, points)


def peak_fisher(kind: str, N: int, sigma: float,
                theta_grid: Optional[np.ndarray] = None) -> Tuple[float, float]:
    kind = check_kind(kind)
    NoiseModel(sigma)
    grid = np.asarray(default_theta_grid() if theta_grid is None else theta_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > math.pi / 2 + 1e-12):
        raise SpinorInputError("Theta grid must lie in (0, pi/2].")
    values = np.array([fisher_at(kind, N, float(t), sigma) for t in grid])
    best = int(np.argmax(values))
    top = float(values[best])
    if top <= 0 or (top - float(np.min(values))) <= 1e-7 * top:
        # plateau (noiseless optimal measurement): report the grid start
        return float(grid[0]), top

    def objective(theta):
        return -fisher_at(kind, N, float(theta), sigma)

    res = None
    if 0 < best < grid.size - 1:
        try:
            res = minimize_scalar(objective, bracket=(grid[best - 1], grid[best], grid[best + 1]),
                                  method="golden", tol=config.PEAK_GOLDEN_TOL)
        except ValueError:
            logger.debug(f"Golden bracket rejected around theta={grid[best]:.6g}; using bounded search")
    if res is None:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": config.PEAK_GOLDEN_TOL * max(lo, 1e-12)})
    theta_star, f_star = float(res.x), float(-res.fun)
    if f_star < top or not grid[0] <= theta_star <= grid[-1]:
        return float(grid[best]), top
    return theta_star, f_star


def sigma_max(kind: str, N: int, theta_grid: Optional[np.ndarray] = None,
              xtol: Optional[float] = None) -> float:
    """Largest detection noise for which the peak Fisher information still exceeds N."""
    kind = check_kind(kind)
    N = validate_system_size(N)
    if N < 4:
        raise SpinorInputError(f"sigma_max needs N >= 4, got {N}.")
    xtol = config.SIGMA_MAX_XTOL if xtol is None else xtol

    def excess(sigma):
        return peak_fisher(kind, N, sigma, theta_grid)[1] - N

    lo, hi = 0.25, math.sqrt(N)
    while excess(lo) <= 0:
        lo /= 2.0
        if lo < 1e-3:
            logger.warning(f"{kind} state with N={N} does not beat the SQL even without noise")
            return 0.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e3 * N:
            raise SpinorInputError(f"No noise level up to {hi:g} pushes the {kind} Fisher information below N.")
    return float(bisect(excess, lo, hi, xtol=xtol))


def cramer_rao_bound(fisher: float, shots: int = 1) -> float:
    """1/sqrt(shots * F); pass a QFI to get the quantum bound."""
    if shots < 1:
        raise SpinorInputError(f"Number of measurements must be at least 1, got {shots}.")
    if not fisher > 0:
        raise SpinorInputError(f"Fisher information must be positive, got {fisher}.")
    return 1.0 / math.sqrt(shots * fisher)


def wigner_d_column_squared(j: int, beta: float) -> np.ndarray:
    """|d^j_{m,0}(beta)|^2 for m = -j..j through Jacobi polynomials."""
    m = np.abs(np.arange(-j, j + 1))
    n = j - m
    x = math.cos(beta)
    weight = comb(j + m, j) / comb(j, m)
    half = (math.sin(beta / 2) * math.cos(beta / 2)) ** (2 * m)
    poly = eval_jacobi(n, m, m, x)
    return weight * half * poly ** 2


def _ideal_generator(space, kind: str, phi: float) -> np.ndarray:
    E = space.hop
    if kind == "cba":
        return (np.exp(-1j * phi) * E(0, 1) + np.exp(1j * phi) * E(0, -1)
                + np.exp(1j * phi) * E(1, 0) + np.exp(-1j * phi) * E(-1, 0)) / (2 * math.sqrt(2))
    return (np.exp(-1j * phi) * E(1, -1) + np.exp(1j * phi) * E(-1, 1)) / 2


def _input_vector(space, kind: str) -> np.ndarray:
    if kind == "cba":
        return space.embed(cba_coefficients(space.N))
    return space.embed(state_twin_fock(space.N))


def full_space_distribution(kind: str, N: int, theta: float, generator: Optional[str] = None,
                            phi: float = 0.0) -> OutcomeDistribution:
    """Dense-matrix rotation of the input state and its D distribution (oracle)."""
    kind = check_kind(kind)
    space = full_space(check_oracle_size(N))
    R = _ideal_generator(space, kind, phi) if generator is None else space.generator(generator)
    psi = expm(-1j * theta * R) @ _input_vector(space, kind)
    dpsi = -1j * (R @ psi)
    probs = np.abs(psi) ** 2
    dprobs = 2.0 * np.real(np.conj(psi) * dpsi)
    idx = space.magnetization() + N
    P = np.bincount(idx, weights=probs, minlength=2 * N + 1)
    dP = np.bincount(idx, weights=dprobs, minlength=2 * N + 1)
    return OutcomeDistribution(float(theta), N, P, dP)


def optimality_residual(kind: str, N: int, theta: float, generator: Optional[str] = None,
                        phi: float = 0.0) -> float:
    """max over Fock projectors of |Re <psi(theta)| P R |psi(theta)>|."""
    kind = check_kind(kind)
    space = full_space(check_oracle_size(N))
    R = _ideal_generator(space, kind, phi) if generator is None else space.generator(generator)
    psi = expm(-1j * theta * R) @ _input_vector(space, kind)
    per_state = np.real(np.conj(psi) * (R @ psi))
    return float(np.max(np.abs(per_state)))


def quantum_fisher_full_space(kind: str, N: int, generator: Optional[str] = None) -> float:
    kind = check_kind(kind)
    space = full_space(check_oracle_size(N))
    R = _ideal_generator(space, kind, 0.0) if generator is None else space.generator(generator)
    psi = _input_vector(space, kind)
    mean = np.vdot(psi, R @ psi)
    return float(4.0 * (np.vdot(R @ psi, R @ psi) - abs(mean) ** 2).real)
