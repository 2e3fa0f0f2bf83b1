# parametric.py
"""Quadratic (su(1,1)) model of pair creation after a quench from |k=0>.

alpha = q + lambda (N - 1/2), beta = N lambda, Delta = beta^2 - alpha^2.
Everything is written through s(t; Delta) = S(t; Delta)^2 with
S = sinh(sqrt(Delta) t)/sqrt(Delta), t or sin(sqrt(-Delta) t)/sqrt(-Delta),
which is continuous across Delta = 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

import config
from decomposition import h_number_distribution, to_gh_basis
from dynamics import PropagatorConfig, evolve_quench
from errors import SpinorInputError
from fockspace import SpinorState, mean_side_population, side_population_variance, validate_system_size
from hamiltonian import coupling

logger = logging.getLogger("SpinorMetrology")


@dataclass(frozen=True)
class QuadraticModel:
    N: int
    alpha: float
    beta: float

    @property
    def delta(self) -> float:
        return self.beta ** 2 - self.alpha ** 2

    @property
    def tau(self) -> Optional[float]:
        return 1.0 / math.sqrt(self.delta) if self.delta > 0 else None

    @classmethod
    def from_system(cls, N: int, q: float) -> "QuadraticModel":
        N = validate_system_size(N)
        lam = coupling(N)
        return cls(N=N, alpha=q + lam * (N - 0.5), beta=N * lam)


@dataclass
class PAPrediction:
    t: float
    mean_pairs: float
    spread: float
    qfi_over_N: float
    u_g: np.ndarray
    u_h: np.ndarray
    valid: bool


def resonance_q(N: int) -> float:
    N = validate_system_size(N)
    return (N - 0.5) / (2.0 * N)


def _check_time(t: float) -> float:
    if t < 0:
        raise SpinorInputError(f"Time must be non-negative, got {t}.")
    return float(t)


def _series_terms(delta: float, t: float) -> Tuple[float, float]:
    """(S, C) with S = sinh(sqrt(D) t)/sqrt(D), C = cosh(sqrt(D) t), continued to D <= 0."""
    x = delta * t * t
    if abs(x) < 1e-8:
        return t * (1.0 + x / 6.0), 1.0 + x / 2.0
    if delta > 0:
        r = math.sqrt(delta)
        return math.sinh(r * t) / r, math.cosh(r * t)
    r = math.sqrt(-delta)
    return math.sin(r * t) / r, math.cos(r * t)


def squeeze_profile(delta: float, t: float) -> float:
    """s(t; Delta)."""
    S, _ = _series_terms(delta, _check_time(t))
    return S * S


def mean_pairs(model: QuadraticModel, t: float) -> float:
    """<N+> = <N-> = <N_g>."""
    return model.beta ** 2 * squeeze_profile(model.delta, t)


def pair_spread(model: QuadraticModel, t: float) -> float:
    n = mean_pairs(model, t)
    return math.sqrt(n * (n + 1.0))


def is_valid(model: QuadraticModel, t: float) -> bool:
    return mean_pairs(model, t) <= config.BOGOLIUBOV_VALIDITY_FRACTION * model.N


def qfi_analytic(model: QuadraticModel, t: float) -> Tuple[float, bool]:
    """F_Q/N = 1 + 2(<N+> + Delta N+) and whether the quadratic model still applies."""
    n = mean_pairs(model, t)
    value = 1.0 + 2.0 * (n + math.sqrt(n * (n + 1.0)))
    return value, n <= config.BOGOLIUBOV_VALIDITY_FRACTION * model.N


def covariance_directions(model: QuadraticModel, t: float) -> Dict[str, object]:
    n_g = mean_pairs(model, t)
    spread_g = math.sqrt(2.0 * n_g * (n_g + 1.0))
    N = model.N
    lam_plus = 0.25 * N * (1.0 + 2.0 * n_g + math.sqrt(2.0) * spread_g)
    lam_minus = 0.25 * N * (1.0 + 2.0 * n_g - math.sqrt(2.0) * spread_g)
    lam_z = spread_g ** 2 / 4.0
    if spread_g == 0.0:
        ratio = 0.0
    else:
        ratio = math.sqrt(2.0) * model.alpha ** 2 * n_g / (model.beta ** 2 * spread_g)
    if abs(ratio) > 1.0:
        logger.warning(f"Direction ratio {ratio:.4g} outside [-1, 1] at t={t:.4g}; clipping")
        ratio = max(-1.0, min(1.0, ratio))
    u_g = np.array([math.sqrt(1.0 + ratio), -math.sqrt(1.0 - ratio), 0.0]) / math.sqrt(2.0)
    u_h = np.array([-u_g[1], u_g[0], 0.0])
    return {
        "lambda_plus_xy": lam_plus,
        "lambda_minus_xy": lam_minus,
        "lambda_z": lam_z,
        "u_g": u_g,
        "u_h": u_h,
    }


def predict(model: QuadraticModel, t: float) -> PAPrediction:
    qfi, valid = qfi_analytic(model, t)
    dirs = covariance_directions(model, t)
    return PAPrediction(
        t=float(t),
        mean_pairs=mean_pairs(model, t),
        spread=pair_spread(model, t),
        qfi_over_N=qfi,
        u_g=dirs["u_g"],
        u_h=dirs["u_h"],
        valid=valid,
    )


def squeezed_amplitude_modulus(model: QuadraticModel, t: float) -> float:
    """|c| of the two-mode squeezed vacuum reached at time t."""
    S, _ = _series_terms(model.delta, _check_time(t))
    b2s2 = model.beta ** 2 * S * S
    return math.sqrt(b2s2 / (1.0 + b2s2))


def pair_distribution(c_abs: float, n_max: int) -> np.ndarray:
    """P(n pairs) = sqrt(1 - |c|^2) C(2n, n) (|c|/2)^(2n) for n = 0..n_max."""
    if not 0 <= c_abs < 1:
        raise SpinorInputError(f"Need 0 <= |c| < 1, got {c_abs}.")
    n = np.arange(n_max + 1)
    if c_abs == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    log_terms = gammaln(2 * n + 1) - 2 * gammaln(n + 1) + 2 * n * math.log(c_abs / 2.0)
    return math.sqrt(1.0 - c_abs ** 2) * np.exp(log_terms)


def generating_function(c_abs: float, z: float = 0.0, n_terms: int = 4000) -> Tuple[float, float]:
    """Truncated sum of C(2n,n)(|c|/2)^(2n) e^(nz) and its closed form 1/sqrt(1 - |c|^2 e^z)."""
    x = c_abs ** 2 * math.exp(z)
    if not 0 <= x < 1:
        raise SpinorInputError(f"Generating function diverges for |c|^2 e^z = {x}.")
    n = np.arange(n_terms)
    if c_abs == 0:
        return 1.0, 1.0
    log_terms = gammaln(2 * n + 1) - 2 * gammaln(n + 1) + 2 * n * math.log(c_abs / 2.0) + n * z
    return float(np.sum(np.exp(log_terms))), 1.0 / math.sqrt(1.0 - x)


def side_mode_statistics(s: SpinorState) -> Dict[str, float]:
    """<N+>, Delta N+, <N_g>, <N_h>, Delta N_g of an exact D=0 state."""
    g = to_gh_basis(s)
    weights = np.abs(g.amplitudes) ** 2
    n_h_axis = np.arange(s.N + 1)
    p_h = h_number_distribution(g)
    p_g = np.sum(weights, axis=0)
    mean_g = float(np.dot(n_h_axis, p_g))
    var_g = float(np.dot(n_h_axis ** 2, p_g)) - mean_g ** 2
    return {
        "mean_plus": mean_side_population(s),
        "spread_plus": math.sqrt(max(side_population_variance(s), 0.0)),
        "mean_g": mean_g,
        "mean_h": float(np.dot(n_h_axis, p_h)),
        "spread_g": math.sqrt(max(var_g, 0.0)),
    }


def compare_with_exact(N: int, t_grid: Sequence[float], settings: Optional[PropagatorConfig] = None,
                       q: Optional[float] = None) -> List[Dict[str, float]]:
    """Per-time rows of exact (optimal 4x4-block) and analytic QFI per particle."""
    N = validate_system_size(N)
    q = resonance_q(N) if q is None else float(q)
    model = QuadraticModel.from_system(N, q)
    times = np.asarray(t_grid, dtype=float)
    traj = evolve_quench(N, q, float(times[-1]), settings, times=times)
    rows: List[Dict[str, float]] = []
    for t, exact, state in zip(traj.times, traj.qfi["block4"], traj.states):
        analytic, valid = qfi_analytic(model, float(t))
        exact_n = float(exact) / N
        rows.append({
            "t": float(t),
            "mean_side_population": mean_side_population(state),
            "analytic_mean_pairs": mean_pairs(model, float(t)),
            "fq_exact_over_n": exact_n,
            "fq_analytic_over_n": analytic,
            "relative_deviation": abs(analytic - exact_n) / exact_n,
            "analytic_valid": valid,
            "fq_exact_over_n2": exact_n / N,
        })
    return rows


def bogoliubov_window(rows: Sequence[Dict[str, float]], N: int) -> List[Dict[str, float]]:
    """Leading rows of compare_with_exact before <N+> first reaches the validity fraction of N.

    The exact pair number returns below the threshold at late times, long after the
    analytic law has run away, so the window is cut at the first crossing.
    """
    limit = config.BOGOLIUBOV_VALIDITY_FRACTION * N
    window: List[Dict[str, float]] = []
    for row in sorted(rows, key=lambda r: r["t"]):
        if row["mean_side_population"] >= limit or not row["analytic_valid"]:
            break
        window.append(row)
    return window
