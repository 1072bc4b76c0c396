"""Exact multiplicative arithmetic for the modulus q.

Everything here is exact (integers and :class:`fractions.Fraction`) except the
Euler product ``P_q(s)``, which is evaluated in complex floating point, and the
numerical estimate of the Rankin-Selberg constant ``K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import TYPE_CHECKING, Iterator

import numpy as np
from sympy import factorint

if TYPE_CHECKING:
    from .eigenform import EigenformCoefficients

MAX_MODULUS = 2**63 - 1


@dataclass(frozen=True)
class Factorization:
    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod_ = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise ValueError(f"malformed factorization {self.factors}")
            last = p
            prod_ *= p**e
        if prod_ != self.value:
            raise ValueError(f"factors do not multiply to {self.value}")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def nu(self) -> int:
        """Number of distinct prime factors."""
        return len(self.factors)

    def divisors(self) -> list[int]:
        out = [1]
        for p, e in self.factors:
            out = [d * p**j for d in out for j in range(e + 1)]
        return sorted(out)

    def squarefree_divisors(self) -> Iterator[int]:
        for r in range(self.nu + 1):
            for combo in combinations(self.primes, r):
                yield math.prod(combo)

    def __int__(self):
        return self.value


def factorize(n: int) -> Factorization:
    n = int(n)
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    if n > MAX_MODULUS:
        raise ValueError(f"{n} exceeds the 63-bit range")
    return Factorization(n, tuple(sorted(factorint(n).items())))


def _as_fact(q) -> Factorization:
    return q if isinstance(q, Factorization) else factorize(q)


def mobius(n) -> int:
    f = _as_fact(n)
    if any(e > 1 for _, e in f.factors):
        return 0
    return -1 if f.nu % 2 else 1


def euler_phi(n) -> int:
    f = _as_fact(n)
    out = 1
    for p, e in f.factors:
        out *= (p - 1) * p ** (e - 1)
    return out


def num_divisors(n) -> int:
    return math.prod(e + 1 for _, e in _as_fact(n).factors)


def psi(q) -> Fraction:
    """Density of primitive characters: q*psi(q) of them exist modulo q."""
    out = Fraction(1)
    for p, e in _as_fact(q).factors:
        out *= Fraction(p - 2, p) if e == 1 else Fraction(p - 1, p) ** 2
    return out


def primitive_count(q) -> int:
    f = _as_fact(q)
    n = f.value * psi(f)
    assert n.denominator == 1
    return int(n)


@dataclass(frozen=True)
class EulerProductValue:
    at_s: complex
    log_derivative_at_1: float | None = None


def _local_P(p: int, s: complex, ap2: float) -> complex:
    u = p ** (-s)
    return (1 - u) ** 2 * (1 - (ap2 - 2) * u + u * u) / (1 - u * u)


def _local_logderiv(p: int, s: complex, ap2: float) -> complex:
    # d/ds log of the local factor; du/ds = -log(p) u
    u = p ** (-s)
    b = ap2 - 2
    dlog_du = -2 / (1 - u) + (-b + 2 * u) / (1 - b * u + u * u) + 2 * u / (1 - u * u)
    return -math.log(p) * u * dlog_du


def euler_product_P(q, s: complex, coeffs: "EigenformCoefficients") -> EulerProductValue:
    """Finite Euler product P_q(s) over the primes dividing q.

    For ``s == 1`` the logarithmic derivative P_q'(1)/P_q(1) is filled in as
    well, computed analytically factor by factor.
    """
    f = _as_fact(q)
    s = complex(s)
    if s.real <= 0.5:
        raise ValueError("P_q(s) requires Re(s) > 1/2")
    for p in f.primes:
        if p > coeffs.length:
            raise ValueError(f"coefficient table (N={coeffs.length}) does not reach p={p}")
    val = complex(1.0)
    logd = complex(0.0)
    for p in f.primes:
        ap2 = float(coeffs.a[p]) ** 2
        val *= _local_P(p, s, ap2)
        if s == 1:
            logd += _local_logderiv(p, s, ap2)
    return EulerProductValue(val, logd.real if s == 1 else None)


@dataclass(frozen=True)
class ConditionReport:
    q: int
    x_threshold: float
    lhs: float
    rhs: float
    holds: bool


def check_assumption(q) -> ConditionReport:
    """Evaluate the prime-divisor condition of the moment asymptotic.

    At computable sizes ``x`` is barely above 1 and the right-hand side is tiny,
    so the condition normally fails; it is diagnostic only and never blocks a
    moment computation.
    """
    f = _as_fact(q)
    if f.value < 17:
        raise ValueError("check_assumption needs q >= 17 (triple logarithm)")
    ll = math.log(math.log(f.value))
    lll = math.log(ll)
    x = math.exp(ll / (200 * lll))
    lhs = math.fsum(1 / p for p in f.primes if p > x)
    rhs = ll**-10
    return ConditionReport(f.value, x, lhs, rhs, lhs <= rhs)


def divisor_condition_sum(q, threshold: float | None = None) -> float:
    """Sum of |mu(d)| prod_{p|d}(1+10/sqrt(p)) / d over d | q, d >= (log q)^0.05."""
    f = _as_fact(q)
    if f.value < 3:
        raise ValueError("divisor_condition_sum needs q >= 3")
    if threshold is None:
        threshold = math.log(f.value) ** 0.05
    terms = []
    for r in range(f.nu + 1):
        for combo in combinations(f.primes, r):
            d = math.prod(combo)
            if d >= threshold:
                terms.append(math.prod(1 + 10 / math.sqrt(p) for p in combo) / d)
    return math.fsum(terms)


def small_divisor_threshold(q: int) -> float:
    return math.log(q) ** 0.05


def orthogonality_rhs(n: int, m: int, q) -> int:
    """sum over d | q with n = m mod q/d of mu(d) phi(q/d)."""
    f = _as_fact(q)
    if math.gcd(n * m, f.value) != 1:
        raise ValueError("orthogonality_rhs needs gcd(nm, q) = 1")
    total = 0
    for d in f.divisors():
        mu = mobius(d)
        if mu and (n - m) % (f.value // d) == 0:
            total += mu * euler_phi(f.value // d)
    return total


def estimate_K(coeffs: "EigenformCoefficients", cutoff: int, richardson: bool = False) -> float:
    """Rankin-Selberg constant K as twice the mean of a_f(n)^2.

    ``richardson=True`` removes a constant offset in the partial sum by
    differencing against cutoff/2, i.e. it averages over (cutoff/2, cutoff].
    """
    cutoff = int(cutoff)
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    if cutoff > coeffs.length:
        raise ValueError(f"cutoff {cutoff} exceeds coefficient table ({coeffs.length})")
    sq = np.square(coeffs.a[1 : cutoff + 1])
    if not richardson:
        return 2.0 * math.fsum(sq) / cutoff
    half = cutoff // 2
    if half < 1:
        raise ValueError("Richardson step needs cutoff >= 2")
    return 2.0 * math.fsum(sq[half:]) / (cutoff - half)


def divisor_count_table(N: int) -> np.ndarray:
    """d(n) for 0 <= n <= N (index 0 unused)."""
    d = np.zeros(N + 1, dtype=np.int64)
    for i in range(1, N + 1):
        d[i::i] += 1
    return d


def coprime_mask(q: int, N: int) -> np.ndarray:
    """Boolean array, True at n in [0, N] with gcd(n, q) = 1."""
    mask = np.ones(N + 1, dtype=bool)
    mask[0] = q == 1
    for p in factorize(q).primes:
        mask[::p] = False
    return mask
