# hamiltonian.py
"""D=0 block of the single-mode spin-1 Hamiltonian in units q_c = hbar = 1."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from errors import SpectrumError
from fockspace import SpinorState, validate_system_size

logger = logging.getLogger("SpinorMetrology")


def coupling(N: int) -> float:
    """Ferromagnetic lambda with q_c = 2N|lambda| = 1."""
    return -1.0 / (2.0 * validate_system_size(N))


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: np.ndarray
    N: int
    q: float

    def __post_init__(self):
        d = np.array(self.diag, dtype=np.float64)
        e = np.array(self.offdiag, dtype=np.float64)
        if e.shape[0] != d.shape[0] - 1:
            raise ValueError(f"Off-diagonal length {e.shape[0]} does not match diagonal {d.shape[0]}.")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        return tridiagonal_apply(self.diag, self.offdiag, v)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def gershgorin_bounds(self) -> Tuple[float, float]:
        radius = np.zeros(self.dim)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))


def tridiagonal_apply(d: np.ndarray, e: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = d * v
    if e.shape[0]:
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
    return out


def hamiltonian_parts(N: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H(q) = diag0 + q*diag_q + offdiag couplings; the q dependence is linear."""
    N = validate_system_size(N)
    lam = coupling(N)
    k = np.arange(N // 2 + 1, dtype=np.float64)
    diag0 = lam * (N - 2.0 * k - 0.5) * 2.0 * k
    diag_q = 2.0 * k
    kk = k[:-1]
    offdiag = lam * (kk + 1.0) * np.sqrt((N - 2.0 * kk) * (N - 2.0 * kk - 1.0))
    return diag0, diag_q, offdiag


def build_hamiltonian(N: int, q: float) -> TridiagonalOperator:
    diag0, diag_q, offdiag = hamiltonian_parts(N)
    return TridiagonalOperator(diag0 + q * diag_q, offdiag, int(N), float(q))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def ground_state(H: TridiagonalOperator) -> Tuple[float, SpinorState]:
    try:
        w, v = eigh_tridiagonal(H.diag, H.offdiag, select="i", select_range=(0, 0))
    except LinAlgError as e:
        raise SpectrumError("Tridiagonal eigensolver did not converge", N=H.N, q=H.q, detail=str(e)) from e
    vec = _fix_sign(v[:, 0])
    vec = vec / np.linalg.norm(vec)
    return float(w[0]), SpinorState(H.N, vec)


def spectrum(N: int, q: float) -> np.ndarray:
    H = build_hamiltonian(N, q)
    try:
        return eigh_tridiagonal(H.diag, H.offdiag, eigvals_only=True)
    except LinAlgError as e:
        raise SpectrumError("Tridiagonal eigensolver did not converge", N=N, q=q, detail=str(e)) from e


def spectral_gap(N: int, q: float) -> float:
    H = build_hamiltonian(N, q)
    try:
        w = eigh_tridiagonal(H.diag, H.offdiag, eigvals_only=True, select="i", select_range=(0, 1))
    except LinAlgError as e:
        raise SpectrumError("Tridiagonal eigensolver did not converge", N=N, q=q, detail=str(e)) from e
    gap = float(w[1] - w[0])
    if gap <= 0.0:
        raise SpectrumError("Non-positive spectral gap", N=N, q=q, gap=gap)
    return gap


def expectation(H: TridiagonalOperator, s: SpinorState) -> float:
    return float(np.vdot(s.c, H.apply(s.c)).real)
