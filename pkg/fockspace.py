# fockspace.py
"""Magnetization-free Fock basis of N spin-1 atoms and the state container.

Basis vector |k> means (N-=k, N0=N-2k, N+=k); amplitudes are stored as an
immutable complex vector indexed by k = 0..N//2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

import config
from errors import SpinorInputError

logger = logging.getLogger("SpinorMetrology")


def validate_system_size(N: int) -> int:
    if isinstance(N, bool) or int(N) != N:
        raise SpinorInputError(f"Atom number must be an integer, got {N!r}.")
    N = int(N)
    if N < 2:
        raise SpinorInputError(f"Atom number must be at least 2, got {N}.")
    return N


def require_even(N: int, what: str = "Twin-Fock") -> int:
    N = validate_system_size(N)
    if N % 2:
        raise SpinorInputError(f"{what} workflows need an even atom number, got {N}.")
    return N


@dataclass(frozen=True)
class ModeOccupations:
    n_minus: int
    n_zero: int
    n_plus: int

    def __post_init__(self):
        if min(self.n_minus, self.n_zero, self.n_plus) < 0:
            raise SpinorInputError(f"Negative occupation in {self}.")

    @property
    def N(self) -> int:
        return self.n_minus + self.n_zero + self.n_plus

    @property
    def D(self) -> int:
        return self.n_plus - self.n_minus


def basis_dim(N: int) -> int:
    N = validate_system_size(N)
    return N // 2 + 1


def basis_occupations(N: int) -> List[ModeOccupations]:
    return [ModeOccupations(k, N - 2 * k, k) for k in range(basis_dim(N))]


@dataclass(frozen=True, eq=False)
class SpinorState:
    """Normalized D=0 state. The amplitude array is read-only."""
    N: int
    c: np.ndarray

    def __post_init__(self):
        N = validate_system_size(self.N)
        c = np.array(self.c, dtype=np.complex128).reshape(-1)
        if c.shape[0] != N // 2 + 1:
            raise SpinorInputError(
                f"Expected {N // 2 + 1} amplitudes for N={N}, got {c.shape[0]}."
            )
        if not np.all(np.isfinite(c)):
            raise SpinorInputError("State amplitudes must be finite.")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > config.NORM_TOLERANCE:
            raise SpinorInputError(
                f"State is not normalized: |c|^2 = {norm!r} (tolerance {config.NORM_TOLERANCE})."
            )
        c.setflags(write=False)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.dim)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.c) ** 2

    def __repr__(self) -> str:
        return f"SpinorState(N={self.N}, dim={self.dim})"


def renormalize(N: int, amplitudes) -> Tuple[SpinorState, float]:
    """Normalize raw amplitudes and report |1 - norm| so callers can budget drift."""
    c = np.asarray(amplitudes, dtype=np.complex128)
    norm = float(np.linalg.norm(c))
    if norm == 0.0 or not np.isfinite(norm):
        raise SpinorInputError("Cannot renormalize a zero or non-finite vector.")
    return SpinorState(N, c / norm), abs(norm - 1.0)


def state_fock(N: int, k: int) -> SpinorState:
    dim = basis_dim(N)
    if not 0 <= k < dim:
        raise SpinorInputError(f"k={k} outside 0..{dim - 1} for N={N}.")
    c = np.zeros(dim, dtype=np.complex128)
    c[k] = 1.0
    return SpinorState(N, c)


def state_polar(N: int) -> SpinorState:
    return state_fock(N, 0)


def state_twin_fock(N: int) -> SpinorState:
    N = require_even(N)
    return state_fock(N, N // 2)


def mean_side_population(s: SpinorState) -> float:
    """<N+> (= <N->) of a D=0 state."""
    return float(np.dot(s.k, s.probabilities))


def mean_zero_population(s: SpinorState) -> float:
    return s.N - 2.0 * mean_side_population(s)


def side_population_variance(s: SpinorState) -> float:
    p = s.probabilities
    k = s.k
    mean = float(np.dot(k, p))
    return float(np.dot(k * k, p)) - mean * mean


def overlap(a: SpinorState, b: SpinorState) -> complex:
    if a.N != b.N:
        raise SpinorInputError(f"States belong to different atom numbers ({a.N} vs {b.N}).")
    return complex(np.vdot(a.c, b.c))


def fidelity(a: SpinorState, b: SpinorState) -> float:
    return min(1.0, abs(overlap(a, b)) ** 2)
