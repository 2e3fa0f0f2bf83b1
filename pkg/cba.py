# cba.py
"""Exact analytics of the q=0 ground state (the CBA state).

Two evaluation paths for the coefficients: exact rationals (squared
amplitudes are rational) for small N, log-factorials for production.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import List, Literal, Tuple

import numpy as np
from scipy.special import gammaln

from errors import IdentityViolation, SpinorInputError
from fockspace import SpinorState, require_even, validate_system_size

logger = logging.getLogger("SpinorMetrology")

StateKind = Literal["cba", "tf"]


def check_kind(kind: str) -> str:
    kind = str(kind).lower()
    if kind not in ("cba", "tf"):
        raise SpinorInputError(f"Unknown state kind '{kind}'; expected 'cba' or 'tf'.")
    return kind


def cba_coefficients(N: int) -> SpinorState:
    N = validate_system_size(N)
    k = np.arange(N // 2 + 1, dtype=np.float64)
    log_c = -k * math.log(2.0) - gammaln(k + 1) - 0.5 * gammaln(N - 2 * k + 1)
    # Normalizing numerically: the analytic prefactor carries ~1e-12 rounding at large N.
    c = np.exp(log_c - np.max(log_c))
    c /= np.linalg.norm(c)
    return SpinorState(N, c)


def _prefactor_squared(N: int) -> Fraction:
    return Fraction(2 ** N * math.factorial(N) ** 3, math.factorial(2 * N))


def cba_probabilities_exact(N: int) -> List[Fraction]:
    """|c_k|^2 = 2^N (N!)^3 / (2N)! / (4^k (k!)^2 (N-2k)!), exact."""
    N = validate_system_size(N)
    pref = _prefactor_squared(N)
    return [
        pref / (4 ** k * math.factorial(k) ** 2 * math.factorial(N - 2 * k))
        for k in range(N // 2 + 1)
    ]


def wick_factor(N: int, k: int) -> Fraction:
    """X(k) = N! / (2^k k! (N-2k)!), the number of k-pair contractions of N operators."""
    if N < 0:
        raise SpinorInputError(f"Operator count must be non-negative, got {N}.")
    if k < 0 or 2 * k > N:
        raise SpinorInputError(f"Need 0 <= k <= N/2, got k={k}, N={N}.")
    return Fraction(math.factorial(N), 2 ** k * math.factorial(k) * math.factorial(N - 2 * k))


def pairing_identity(n: int, m: int) -> Tuple[Fraction, Fraction]:
    """sum_k C(m,k) C(m-k, n-2k) 2^(n-2k) against C(2m, n); raises if they differ."""
    if m < 0 or n < 0 or n > 2 * m:
        raise SpinorInputError(f"Need 0 <= n <= 2m, got n={n}, m={m}.")
    lhs = sum(
        math.comb(m, k) * math.comb(m - k, n - 2 * k) * 2 ** (n - 2 * k)
        for k in range(n // 2 + 1)
        if n - 2 * k <= m - k
    )
    rhs = math.comb(2 * m, n)
    if lhs != rhs:
        raise IdentityViolation(f"Pairing identity fails at n={n}, m={m}: {lhs} != {rhs}.")
    return Fraction(lhs), Fraction(rhs)


def exact_qfi_rational(kind: str, N: int) -> Fraction:
    kind = check_kind(kind)
    if kind == "tf":
        N = require_even(N)
        return Fraction(N * (N + 2), 2)
    N = validate_system_size(N)
    return Fraction(N * (N + 1), 2)


def exact_qfi(kind: str, N: int) -> float:
    return float(exact_qfi_rational(kind, N))


def exact_mean_side_population_rational(N: int) -> Fraction:
    N = validate_system_size(N)
    return Fraction(N, 4) * Fraction(2 * N - 2, 2 * N - 1)


def exact_mean_side_population(N: int) -> float:
    return float(exact_mean_side_population_rational(N))


def recursion_rhs_squared(N: int, k: int) -> Fraction:
    """Square of prefactor*(N+1)/(2^(k+1) (k+1)! sqrt((N-2k-1)!))."""
    pref = _prefactor_squared(N)
    return pref * (N + 1) ** 2 / (4 ** (k + 1) * math.factorial(k + 1) ** 2 * math.factorial(N - 2 * k - 1))


def recursion_lhs_squared(N: int, k: int) -> Fraction:
    """(sqrt(N-2k) c_k + sqrt(N-2k-1) c_{k+1})^2, exact since c_k c_{k+1} sqrt(...) is rational."""
    p = cba_probabilities_exact(N)
    value = (N - 2 * k) * p[k]
    if k + 1 <= N // 2:
        value += (N - 2 * k - 1) * p[k + 1]
        # 2 sqrt((N-2k)(N-2k-1)) c_k c_{k+1} in closed form
        pref = _prefactor_squared(N)
        value += 2 * pref / (2 ** (2 * k + 1) * math.factorial(k) * math.factorial(k + 1) * math.factorial(N - 2 * k - 2))
    return value


def exact_sx_qfi(N: int) -> Fraction:
    """4 Var(Sx) of the CBA state from the pair-sum representation, exact."""
    N = validate_system_size(N)
    total = sum((k + 1) * recursion_lhs_squared(N, k) for k in range((N - 1) // 2 + 1))
    return total


def recursion_holds(N: int) -> bool:
    return all(
        recursion_lhs_squared(N, k) == recursion_rhs_squared(N, k)
        for k in range((N - 1) // 2 + 1)
    )
