# metrology.py
"""Gell-Mann covariance matrix of D=0 states in closed form and the QFI it implies.

Coordinates are the eight collective Gell-Mann generators G1..G8
(index 0..7). The covariance is block diagonal: a 4x4 block over
(G1, G2, G6, G7), a 2x2 block over (G3, G8) and equal variances for G4, G5.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

import config
from errors import SpinorInputError
from fockspace import SpinorState
from fullspace import GELL_MANN_NAMES, check_oracle_size, full_space, variance

logger = logging.getLogger("SpinorMetrology")

BLOCK4_INDEX = (0, 1, 5, 6)
BLOCK2_INDEX = (2, 7)
G45_INDEX = (3, 4)

_R2 = np.sqrt(2.0)
SX = np.array([1, 0, 0, 0, 0, 1, 0, 0]) / _R2
AY = np.array([0, 1, 0, 0, 0, 0, 1, 0]) / _R2
JX = np.array([0, 0, 0, 1, 0, 0, 0, 0], dtype=float)
JY = np.array([0, 0, 0, 0, -1, 0, 0, 0], dtype=float)

NAMED_DIRECTIONS: Dict[str, np.ndarray] = {"Sx": SX, "Ay": AY, "Jx": JX, "Jy": JY}
for _i, _name in enumerate(GELL_MANN_NAMES):
    NAMED_DIRECTIONS.setdefault(_name, np.eye(8)[_i])

# Defining-representation Gell-Mann matrices, same mode order (-1, 0, +1) as fullspace.
_SINGLE = [
    np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex) / 2,
    np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex) / 2,
    np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex) / 2,
    np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex) / 2,
    np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex) / 2,
    np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex) / 2,
    np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex) / 2,
    np.diag([1, 1, -2]).astype(complex) / (2 * np.sqrt(3)),
]


def _moments(s: SpinorState) -> Tuple[np.ndarray, np.ndarray]:
    return s.k.astype(np.float64), s.probabilities


def coefficients_AB(s: SpinorState) -> Tuple[float, complex]:
    N = s.N
    k, p = _moments(s)
    A = 0.25 * (N + float(np.dot(p, k * (2 * N - 4 * k - 1))))
    kk = k[:-1]
    weight = (kk + 1) * np.sqrt((N - 2 * kk) * (N - 2 * kk - 1))
    B = 0.5 * complex(np.sum(np.conj(s.c[:-1]) * s.c[1:] * weight))
    return A, B


@dataclass
class GellMannCovariance:
    A: float
    B: complex
    block4: np.ndarray
    block2: np.ndarray
    var45: float
    eigenvalues: Dict[str, float] = field(default_factory=dict)
    eigenvectors: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def lambda_plus(self) -> float:
        return self.A + abs(self.B)

    @property
    def lambda_minus(self) -> float:
        return self.A - abs(self.B)

    def full(self) -> np.ndarray:
        gamma = np.zeros((8, 8))
        gamma[np.ix_(BLOCK4_INDEX, BLOCK4_INDEX)] = self.block4
        gamma[np.ix_(BLOCK2_INDEX, BLOCK2_INDEX)] = self.block2
        gamma[3, 3] = gamma[4, 4] = self.var45
        return gamma

    def eigenpairs(self) -> List[Tuple[float, np.ndarray, str]]:
        """(eigenvalue, 8-vector, name) for all eight eigendirections."""
        order = [
            ("lambda_plus", "u_plus_1"), ("lambda_plus", "u_plus_2"),
            ("lambda_minus", "u_minus_1"), ("lambda_minus", "u_minus_2"),
            ("lambda_0", "u_0"), ("lambda_1", "u_1"),
            ("var45", "u_g4"), ("var45", "u_g5"),
        ]
        return [(self.eigenvalues[val], self.eigenvectors[vec], vec) for val, vec in order]


def _embed(values, index) -> np.ndarray:
    u = np.zeros(8)
    u[list(index)] = values
    return u


def covariance_matrix(s: SpinorState) -> GellMannCovariance:
    A, B = coefficients_AB(s)
    re, im = B.real, B.imag
    block4 = A * np.eye(4) + np.array([
        [0, 0, re, im],
        [0, 0, -im, re],
        [re, -im, 0, 0],
        [im, re, 0, 0],
    ])
    k, p = _moments(s)
    var_k = max(0.0, float(np.dot(p, k * k)) - float(np.dot(p, k)) ** 2)
    r3 = np.sqrt(3.0)
    block2 = 0.75 * var_k * np.array([[3.0, -r3], [-r3, 1.0]])
    var45 = 0.5 * float(np.dot(p, k * (k + 1)))

    mod = abs(B)
    # Phase of B is arbitrary when it vanishes; choosing B/|B| = 1 puts Ay and Sx on u_plus.
    if mod > 0.0:
        cr, ci = re / mod, im / mod
    else:
        cr, ci = 1.0, 0.0
    u_plus_1 = np.array([ci, cr, 0.0, 1.0]) / _R2
    u_plus_2 = np.array([cr, -ci, 1.0, 0.0]) / _R2
    u_minus_1 = np.array([-ci, -cr, 0.0, 1.0]) / _R2
    u_minus_2 = np.array([-cr, ci, 1.0, 0.0]) / _R2

    cov = GellMannCovariance(A=A, B=B, block4=block4, block2=block2, var45=var45)
    cov.eigenvalues = {
        "lambda_plus": A + mod,
        "lambda_minus": A - mod,
        "lambda_0": 0.0,
        "lambda_1": 3.0 * var_k,
        "var45": var45,
    }
    cov.eigenvectors = {
        "u_plus_1": _embed(u_plus_1, BLOCK4_INDEX),
        "u_plus_2": _embed(u_plus_2, BLOCK4_INDEX),
        "u_minus_1": _embed(u_minus_1, BLOCK4_INDEX),
        "u_minus_2": _embed(u_minus_2, BLOCK4_INDEX),
        "u_0": _embed(np.array([1.0, r3]) / 2, BLOCK2_INDEX),
        "u_1": _embed(np.array([r3, -1.0]) / 2, BLOCK2_INDEX),
        "u_g4": _embed([1.0], (3,)),
        "u_g5": _embed([1.0], (4,)),
    }
    return cov


def direction_label(u: np.ndarray, atol: float = 1e-9) -> Optional[str]:
    for name in ("Sx", "Ay", "Jx", "Jy"):
        if abs(abs(float(np.dot(u, NAMED_DIRECTIONS[name]))) - 1.0) < atol:
            return name
    return None


@dataclass
class OptimalRotation:
    qfi: float
    directions: np.ndarray
    labels: List[Optional[str]]
    eigen_names: List[str]
    sql: float
    heisenberg: float
    # QFI is reported raw (4 u^T Gamma u); SQL/HL use the pseudospin convention (gap^2 = 1).
    convention: str = "raw 4*u^T*Gamma*u; SQL=N, HL=N^2 for pseudospin directions"


def qfi_optimal(s: SpinorState) -> OptimalRotation:
    cov = covariance_matrix(s)
    pairs = cov.eigenpairs()
    top = max(val for val, _, _ in pairs)
    tol = config.DEGENERACY_RTOL * max(abs(top), 1.0)
    chosen = [(vec, name) for val, vec, name in pairs if top - val <= tol]
    directions = np.array([vec for vec, _ in chosen])
    sql, hl = reference_limits(directions[0], s.N)
    return OptimalRotation(
        qfi=4.0 * top,
        directions=directions,
        labels=[direction_label(vec) for vec, _ in chosen],
        eigen_names=[name for _, name in chosen],
        sql=sql,
        heisenberg=hl,
    )


def _check_direction(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.shape[0] != 8:
        raise SpinorInputError(f"Direction must have 8 components, got {u.shape[0]}.")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise SpinorInputError(f"Direction must be a unit vector, |u| = {np.linalg.norm(u)!r}.")
    return u


def qfi_direction(s: SpinorState, u) -> float:
    u = _check_direction(u)
    cov = covariance_matrix(s)
    return 4.0 * float(u @ cov.full() @ u)


def reference_limits(u, N: int) -> Tuple[float, float]:
    """SQL and HL for rotations along u: (gamma_max - gamma_min)^2 times N and N^2."""
    u = _check_direction(u)
    g = sum(w * m for w, m in zip(u, _SINGLE))
    evals = np.linalg.eigvalsh(g)
    spread = float(evals[-1] - evals[0]) ** 2
    return spread * N, spread * N * N


def full_space_variance_oracle(s: SpinorState, generator: str) -> float:
    """4 Var of a named collective generator, computed with dense matrices."""
    check_oracle_size(s.N)
    space = full_space(s.N)
    psi = space.embed(s)
    return 4.0 * variance(psi, space.generator(generator))


def full_space_covariance(s: SpinorState) -> np.ndarray:
    check_oracle_size(s.N)
    space = full_space(s.N)
    psi = space.embed(s)
    G = space.gell_mann()
    applied = [op @ psi for op in G]
    means = np.array([np.vdot(psi, v) for v in applied])
    gamma = np.empty((8, 8))
    for i in range(8):
        for j in range(8):
            sym = np.vdot(applied[i], applied[j])
            gamma[i, j] = (sym.real - (means[i] * means[j]).real)
    return gamma
