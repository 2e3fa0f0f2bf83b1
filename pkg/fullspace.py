# fullspace.py
"""Dense operators on the full three-mode Fock space, for validation only.

Basis states are (n_minus, n_zero, n_plus) with fixed total N, so the
dimension is (N+1)(N+2)/2. Everything is built from the hopping operators
E_ij = a_i^dagger a_j.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

import config
from errors import SpinorInputError
from fockspace import SpinorState, validate_system_size
from hamiltonian import coupling

logger = logging.getLogger("SpinorMetrology")

MODES = (-1, 0, 1)
GELL_MANN_NAMES = tuple(f"G{i}" for i in range(1, 9))
PSEUDOSPIN_NAMES = ("Sx", "Sy", "Sz", "Ax", "Ay", "Az", "Jx", "Jy", "Jz", "Lx")


def check_oracle_size(N: int) -> int:
    N = validate_system_size(N)
    if N > config.ORACLE_MAX_N:
        raise SpinorInputError(
            f"Full-space oracle limited to N <= {config.ORACLE_MAX_N}, got {N}."
        )
    return N


class FullFockSpace:
    def __init__(self, N: int):
        self.N = check_oracle_size(N)
        self.basis: List[Tuple[int, int, int]] = [
            (n_minus, N - n_minus - n_plus, n_plus)
            for n_minus in range(N + 1)
            for n_plus in range(N + 1 - n_minus)
        ]
        self.index: Dict[Tuple[int, int, int], int] = {b: i for i, b in enumerate(self.basis)}
        self._hops: Dict[Tuple[int, int], np.ndarray] = {}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def magnetization(self) -> np.ndarray:
        return np.array([n_plus - n_minus for n_minus, _, n_plus in self.basis])

    def hop(self, i: int, j: int) -> np.ndarray:
        """E_ij = a_i^dagger a_j as a real dense matrix."""
        key = (i, j)
        if key in self._hops:
            return self._hops[key]
        slot_i, slot_j = MODES.index(i), MODES.index(j)
        E = np.zeros((self.dim, self.dim))
        for col, occ in enumerate(self.basis):
            if i == j:
                E[col, col] = occ[slot_i]
                continue
            if occ[slot_j] == 0:
                continue
            new = list(occ)
            amp = np.sqrt(new[slot_j])
            new[slot_j] -= 1
            amp *= np.sqrt(new[slot_i] + 1)
            new[slot_i] += 1
            E[self.index[tuple(new)], col] = amp
        E.setflags(write=False)
        self._hops[key] = E
        return E

    def number(self, i: int) -> np.ndarray:
        return self.hop(i, i)

    def gell_mann(self) -> List[np.ndarray]:
        E = self.hop
        r3 = np.sqrt(3.0)
        return [
            (E(-1, 0) + E(0, -1)) / 2,
            (E(-1, 0) - E(0, -1)) / 2j,
            (E(-1, -1) - E(0, 0)) / 2,
            (E(1, -1) + E(-1, 1)) / 2,
            (E(-1, 1) - E(1, -1)) / 2j,
            (E(0, 1) + E(1, 0)) / 2,
            (E(0, 1) - E(1, 0)) / 2j,
            (E(-1, -1) + E(0, 0) - 2 * E(1, 1)) / (2 * r3),
        ]

    def generator(self, name: str) -> np.ndarray:
        if name in GELL_MANN_NAMES:
            return self.gell_mann()[int(name[1:]) - 1]
        E = self.hop
        r2 = np.sqrt(2.0)
        # a0^dagger g and a0^dagger h with g, h = (a1 +/- a-1)/sqrt(2)
        zero_g = (E(0, 1) + E(0, -1)) / r2
        zero_h = (E(0, 1) - E(0, -1)) / r2
        n_g = (E(1, 1) + E(-1, -1) + E(1, -1) + E(-1, 1)) / 2
        n_h = (E(1, 1) + E(-1, -1) - E(1, -1) - E(-1, 1)) / 2
        table = {
            "Sx": (zero_g + zero_g.T) / 2,
            "Sy": (zero_g - zero_g.T) / 2j,
            "Sz": (E(0, 0) - n_g) / 2,
            "Ax": (zero_h + zero_h.T) / 2,
            "Ay": (zero_h - zero_h.T) / 2j,
            "Az": (E(0, 0) - n_h) / 2,
            "Jx": (E(1, -1) + E(-1, 1)) / 2,
            "Jy": (E(1, -1) - E(-1, 1)) / 2j,
            "Jz": (E(1, 1) - E(-1, -1)) / 2,
            "Lx": (E(-1, 0) + E(0, -1) + E(0, 1) + E(1, 0)) / r2,
        }
        if name not in table:
            raise SpinorInputError(f"Unknown generator '{name}'.")
        return table[name]

    def combination(self, u: np.ndarray) -> np.ndarray:
        """u . G over the eight Gell-Mann generators."""
        return sum(w * G for w, G in zip(u, self.gell_mann()) if w != 0.0)

    def hamiltonian(self, q: float) -> np.ndarray:
        E = self.hop
        lam = coupling(self.N)
        n_side = E(1, 1) + E(-1, -1)
        H = (lam * (E(0, 0) - 0.5 * np.eye(self.dim)) + q * np.eye(self.dim)) @ n_side
        pair = E(1, 0) @ E(-1, 0)
        return H + lam * (pair + pair.T)

    def lmg_form(self, q: float) -> np.ndarray:
        lam = coupling(self.N)
        Sx, Sz = self.generator("Sx"), self.generator("Sz")
        Ay, Az = self.generator("Ay"), self.generator("Az")
        return 2 * (lam * Sx @ Sx - (q / 3) * Sz) + 2 * (lam * Ay @ Ay - (q / 3) * Az)

    def embed(self, s: SpinorState) -> np.ndarray:
        if s.N != self.N:
            raise SpinorInputError(f"State has N={s.N}, space has N={self.N}.")
        psi = np.zeros(self.dim, dtype=np.complex128)
        for k, amp in enumerate(s.c):
            psi[self.index[(k, self.N - 2 * k, k)]] = amp
        return psi

    def side_mode_fock(self, n_g: int, n_h: int) -> np.ndarray:
        """|N_g, N_h> with the remaining atoms in a0, built by repeated g^dagger a0 and h^dagger a0."""
        if n_g < 0 or n_h < 0 or n_g + n_h > self.N:
            raise SpinorInputError(f"Need N_g, N_h >= 0 with N_g + N_h <= {self.N}, got ({n_g}, {n_h}).")
        E = self.hop
        r2 = np.sqrt(2.0)
        to_g = (E(1, 0) + E(-1, 0)) / r2
        to_h = (E(1, 0) - E(-1, 0)) / r2
        psi = np.zeros(self.dim)
        psi[self.index[(0, self.N, 0)]] = 1.0
        for _ in range(n_h):
            psi = to_h @ psi
        for _ in range(n_g):
            psi = to_g @ psi
        return psi / np.linalg.norm(psi)

    def restrict(self, psi: np.ndarray) -> np.ndarray:
        """D=0 amplitudes c_k of a full-space vector."""
        return np.array([psi[self.index[(k, self.N - 2 * k, k)]] for k in range(self.N // 2 + 1)])


@lru_cache(maxsize=32)
def full_space(N: int) -> FullFockSpace:
    return FullFockSpace(N)


def variance(psi: np.ndarray, op: np.ndarray) -> float:
    mean = np.vdot(psi, op @ psi)
    second = np.vdot(op @ psi, op @ psi)
    return float((second - mean * np.conj(mean)).real)
