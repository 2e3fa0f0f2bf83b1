# decomposition.py
"""Side modes g = (a1 + a-1)/sqrt(2), h = (a1 - a-1)/sqrt(2) and the N_h sectors.

A D=0 Fock state |k> only feeds (N_g, N_h) = (2(k-j), 2j), j = 0..k, so the
basis change is a per-k real orthogonal map with weights
  (-1)^j 2^-k C(k, j) sqrt((2(k-j))! (2j)!) / k!
evaluated with log-factorials.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import gammaln, xlogy

import config
from errors import SpinorInputError
from fockspace import SpinorState
from metrology import SX, qfi_direction

logger = logging.getLogger("SpinorMetrology")


@dataclass(frozen=True, eq=False)
class GHState:
    """amplitudes[N_h, N_g]; N_0 = N - N_h - N_g."""
    N: int
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """Normalized state of n = N - N_h particles in (a0, g), amplitudes over N_g = 0..n."""
    N: int
    N_h: int
    probability: float
    amplitudes: np.ndarray

    @property
    def n(self) -> int:
        return self.N - self.N_h


def _log_weights(kmax: int) -> Tuple[np.ndarray, np.ndarray]:
    """log|w| and sign over a (k, j) grid; entries with j > k are -inf."""
    k = np.arange(kmax + 1)[:, None].astype(float)
    j = np.arange(kmax + 1)[None, :].astype(float)
    valid = j <= k
    kj = np.where(valid, k - j, 0.0)
    log_w = (
        -k * math.log(2.0)
        + gammaln(k + 1) - gammaln(j + 1) - gammaln(kj + 1)
        + 0.5 * (gammaln(2 * kj + 1) + gammaln(2 * j + 1))
        - gammaln(k + 1)
    )
    log_w = np.where(valid, log_w, -np.inf)
    sign = np.where(j.astype(int) % 2 == 0, 1.0, -1.0)
    return log_w, sign


def _weights(kmax: int) -> np.ndarray:
    log_w, sign = _log_weights(kmax)
    return sign * np.exp(log_w)


def to_gh_basis(s: SpinorState) -> GHState:
    N = s.N
    kmax = N // 2
    W = _weights(kmax)
    amps = np.zeros((N + 1, N + 1), dtype=np.complex128)
    for k in range(kmax + 1):
        if s.c[k] == 0:
            continue
        j = np.arange(k + 1)
        amps[2 * j, 2 * (k - j)] += s.c[k] * W[k, : k + 1]
    amps.setflags(write=False)
    return GHState(N, amps)


def from_gh_basis(g: GHState) -> SpinorState:
    """Inverse map onto the D=0 ladder (projects out anything outside it)."""
    kmax = g.N // 2
    W = _weights(kmax)
    c = np.zeros(kmax + 1, dtype=np.complex128)
    for k in range(kmax + 1):
        j = np.arange(k + 1)
        c[k] = np.sum(W[k, : k + 1] * g.amplitudes[2 * j, 2 * (k - j)])
    return SpinorState(g.N, c)


def h_number_distribution(g: GHState) -> np.ndarray:
    return np.sum(np.abs(g.amplitudes) ** 2, axis=1)


def conditional_state(g: GHState, N_h: int) -> ConditionalState:
    if not 0 <= N_h <= g.N:
        raise SpinorInputError(f"N_h must lie in 0..{g.N}, got {N_h}.")
    row = g.amplitudes[N_h, : g.N - N_h + 1]
    prob = float(np.sum(np.abs(row) ** 2))
    if prob <= 0.0:
        raise SpinorInputError(f"Sector N_h={N_h} has zero probability.")
    amps = np.array(row) / math.sqrt(prob)
    amps.setflags(write=False)
    return ConditionalState(g.N, int(N_h), prob, amps)


def two_mode_sx_variance(amplitudes: np.ndarray) -> float:
    """Var of Sx = (a0^dagger g + g^dagger a0)/2 for n = len-1 particles, basis N_g = 0..n."""
    n = amplitudes.shape[0] - 1
    if n == 0:
        return 0.0
    ng = np.arange(n)
    # <N_g + 1| Sx |N_g> with N_0 = n - N_g
    up = 0.5 * np.sqrt((ng + 1.0) * (n - ng))
    sx = np.zeros_like(amplitudes)
    sx[1:] += up * amplitudes[:-1]
    sx[:-1] += up * amplitudes[1:]
    mean = np.vdot(amplitudes, sx)
    return float((np.vdot(sx, sx) - abs(mean) ** 2).real)


def conditional_qfi(c: ConditionalState) -> float:
    return 4.0 * two_mode_sx_variance(c.amplitudes)


def decomposition_identity(s: SpinorState) -> Tuple[float, float]:
    """QFI along Sx of the full state against the P(N_h)-weighted conditional QFIs."""
    g = to_gh_basis(s)
    lhs = qfi_direction(s, SX)
    rhs = 0.0
    for N_h, prob in enumerate(h_number_distribution(g)):
        if prob > 0.0:
            rhs += prob * conditional_qfi(conditional_state(g, N_h))
    return lhs, rhs


def husimi_axes(theta_points: Optional[int] = None, phi_points: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    theta_points = theta_points or config.HUSIMI_THETA_POINTS
    phi_points = phi_points or config.HUSIMI_PHI_POINTS
    return np.linspace(0.0, math.pi, theta_points), np.linspace(0.0, 2.0 * math.pi, phi_points)


def husimi(c: ConditionalState, theta_points: Optional[int] = None,
           phi_points: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Q(theta, phi) = |<CSS(theta, phi)|phi_Nh>|^2; theta = 0 puts every particle in a0.

    Returns (theta axis, phi axis, Q) with Q of shape (len(theta), len(phi)).
    """
    n = c.n
    if n < 1:
        raise SpinorInputError("Husimi distribution needs at least one particle in (a0, g).")
    thetas, phis = husimi_axes(theta_points, phi_points)
    ng = np.arange(n + 1)
    log_binom = 0.5 * (gammaln(n + 1) - gammaln(ng + 1) - gammaln(n - ng + 1))
    phase = np.exp(-1j * np.outer(phis, ng))
    Q = np.empty((thetas.size, phis.size))
    for row, th in enumerate(thetas):
        cos_h, sin_h = abs(math.cos(th / 2)), abs(math.sin(th / 2))
        log_mag = log_binom + xlogy(n - ng, cos_h) + xlogy(ng, sin_h)
        weights = np.exp(log_mag)
        Q[row] = np.abs(phase @ (weights * c.amplitudes)) ** 2
    return thetas, phis, Q
