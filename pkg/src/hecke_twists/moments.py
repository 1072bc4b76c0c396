"""Second moment of central values over primitive characters mod q.

Two independent evaluations of the same finite quantity:

* direct: sum of |L(f x chi, 1/2)|^2 over primitive chi, with every L-value
  from the approximate functional equation (one group DFT gives them all);
* double sum: orthogonality turns the moment into

      sum_{d | q} mu(d) phi(q/d) sum_{n = m mod q/d, (nm, q) = 1} a(n) a(m) / sqrt(nm) V(nm/q^2),

  which is evaluated pair by pair along arithmetic progressions.

They agree because |L|^2 = sum_{n,m} a(n) a(m) chi(n) conj(chi)(m) V(nm/q^2) / sqrt(nm)
holds for each primitive chi (iota_chi iota_conj(chi) = 1 for even weight).
"""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._kernels import pair_sum_chunk
from .arith import (
    check_assumption,
    divisor_condition_sum,
    estimate_K,
    euler_product_P,
    factorize,
    mobius,
    euler_phi,
    psi,
    small_divisor_threshold,
)
from .characters import build_group
from .eigenform import EigenformCoefficients
from .lvalue import TableTooShort, central_values, euler_local_factor
from .special import kernel_table

log = logging.getLogger(__name__)

V_CUT = 1e-12
V_XMAX = 200.0
DEFAULT_BUDGET = 4 * 10**7  # largest nm bound M the double sum will attempt
K_CUTOFF = 4 * 10**5


class BudgetError(RuntimeError):
    """The requested computation exceeds the configured resource budget."""


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("HTM_THREADS", "1")))
    except ValueError:
        return 1


def _v_table():
    return kernel_table("V", 12, 0j, V_XMAX)


def double_sum_range(q: int, v_cut: float = V_CUT) -> int:
    """M such that pairs with nm > M have V(nm/q^2) below v_cut."""
    X = _v_table().x_below(v_cut)
    return int(math.floor(X * q * q))


def _weights(coeffs: EigenformCoefficients, q: int, M: int) -> np.ndarray:
    """b(n) = a(n)/sqrt(n) for (n, q) = 1, else 0; n = 0..M."""
    n = np.arange(M + 1, dtype=np.float64)
    b = np.zeros(M + 1)
    b[1:] = coeffs.a[1 : M + 1] / np.sqrt(n[1:])
    for p in factorize(q).primes:
        b[::p] = 0.0
    return b


def _chunks(n_max: int, pieces: int = 64) -> list[tuple[int, int]]:
    """Split [1, n_max] into ranges of roughly equal pair count (count ~ M/n)."""
    if n_max < 1:
        return []
    edges = {1, n_max + 1}
    for j in range(1, pieces):
        edges.add(int(round(n_max ** (j / pieces))) + 1)
    e = sorted(x for x in edges if 1 <= x <= n_max + 1)
    return [(lo, hi) for lo, hi in zip(e[:-1], e[1:]) if hi > lo]


@dataclass(frozen=True)
class ProgressionSum:
    """sum_{n = m mod ell} b(n) b(m) V(nm/q^2) split into n = m and n != m."""

    ell: int
    diagonal: float
    off_diagonal: float

    @property
    def total(self) -> float:
        return self.diagonal + self.off_diagonal


def progression_sum(b: np.ndarray, q: int, ell: int, M: int, threads: int = 1) -> ProgressionSum:
    tab = _v_table()
    n_max = math.isqrt(M)
    chunks = _chunks(n_max)
    args = (b, ell, M, 2 * math.log(q))
    tail = (tab.u0, tab.du, tab.f, tab.df, tab.limit)

    def run(c):
        return pair_sum_chunk(*args, c[0], c[1], *tail)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return ProgressionSum(ell, math.fsum(p[0] for p in parts), math.fsum(p[1] for p in parts))


@dataclass(frozen=True)
class DoubleSumResult:
    total: float
    small_divisor_part: float
    large_divisor_part: float
    diagonal_part: float
    off_diagonal_part: float
    terms: dict  # d -> mu(d) phi(q/d) * progression sum
    M: int


def second_moment_double_sum(coeffs: EigenformCoefficients, q: int, v_cut: float = V_CUT,
                             threads: int | None = None,
                             budget: int = DEFAULT_BUDGET) -> DoubleSumResult:
    """The moment through orthogonality, with the divisor and diagonal splits.

    "Small" divisors are d < (log q)^0.05; the diagonal/off-diagonal split is
    reported inside the small-divisor part.
    """
    if q < 3:
        raise ValueError("moments need q >= 3")
    threads = threads or default_threads()
    M = double_sum_range(q, v_cut)
    if M > budget:
        raise BudgetError(f"double sum for q={q} needs nm <= {M}, budget is {budget}")
    if M > coeffs.length:
        raise TableTooShort(f"double sum for q={q} needs {M} coefficients, table has {coeffs.length}")
    b = _weights(coeffs, q, M)
    thr = small_divisor_threshold(q)
    terms, small, large, diag = {}, [], [], []
    for d in factorize(q).divisors():
        mu = mobius(d)
        if mu == 0:
            continue
        w = mu * euler_phi(q // d)
        ps = progression_sum(b, q, q // d, M, threads)
        terms[d] = w * ps.total
        if d < thr:
            small.append(w * ps.total)
            diag.append(w * ps.diagonal)
        else:
            large.append(w * ps.total)
    small_part = math.fsum(small)
    large_part = math.fsum(large)
    diag_part = math.fsum(diag)
    return DoubleSumResult(
        total=small_part + large_part,
        small_divisor_part=small_part,
        large_divisor_part=large_part,
        diagonal_part=diag_part,
        off_diagonal_part=small_part - diag_part,
        terms=terms,
        M=M,
    )


def second_moment_direct(coeffs: EigenformCoefficients, q: int, tol: float = 1e-6) -> float:
    """Sum of |L(f x chi, 1/2)|^2 over primitive chi mod q."""
    if q < 3:
        raise ValueError("moments need q >= 3")
    group = build_group(q)
    cv = central_values(coeffs, group, tol)
    L = cv.values[group.primitive_mask]
    return math.fsum(np.abs(L) ** 2)


def full_group_moment(coeffs: EigenformCoefficients, q: int, tol: float = 1e-6) -> float:
    """Sum of |L(f x chi, 1/2)|^2 over all chi mod q.

    A character induced from primitive chi* mod d has the L-function of chi*
    times the local factors at p | q, p not dividing d, so the full sum is
    assembled from the primitive sums for each d | q.
    """
    qf = factorize(q)
    parts = []
    for d in qf.divisors():
        group = build_group(d)
        if not group.primitive_mask.any():
            continue
        cv = central_values(coeffs, group, tol)
        extra = [p for p in qf.primes if d % p]
        for i in np.nonzero(group.primitive_mask)[0]:
            val = cv.values[i]
            if extra:
                chi = group.character(int(i))
                for p in extra:
                    val *= euler_local_factor(coeffs, chi, p, 0j)
            parts.append(abs(val) ** 2)
    return math.fsum(parts)


@dataclass(frozen=True)
class DiagonalResult:
    value: float
    predicted_leading: float
    ratio: float


def diagonal_sum(coeffs: EigenformCoefficients, q: int, tol: float = 1e-12,
                 K: float | None = None) -> DiagonalResult:
    """sum_{(n,q)=1} a(n)^2/n V(n^2/q^2) against its leading term K P_q(1) log q."""
    if q < 3:
        raise ValueError("moments need q >= 3")
    X = _v_table().x_below(tol)
    N = int(math.floor(q * math.sqrt(X)))
    if N > coeffs.length:
        raise TableTooShort(f"diagonal sum for q={q} needs {N} coefficients")
    b = _weights(coeffs, q, N)
    n = np.arange(1, N + 1, dtype=np.float64)
    terms = b[1:] ** 2 * _v_table()(n * n / (q * q))
    value = math.fsum(terms)
    K = K if K is not None else default_K(coeffs)
    pred = K * euler_product_P(q, 1, coeffs).at_s.real * math.log(q)
    return DiagonalResult(value, pred, value / pred)


def default_K(coeffs: EigenformCoefficients) -> float:
    return estimate_K(coeffs, min(K_CUTOFF, coeffs.length), richardson=True)


def main_term(coeffs: EigenformCoefficients, q: int, K: float | None = None) -> float:
    """K P_q(1) psi(q) q log q."""
    if q < 3:
        raise ValueError("moments need q >= 3")
    K = K if K is not None else default_K(coeffs)
    P = euler_product_P(q, 1, coeffs).at_s.real
    return K * P * float(psi(q)) * q * math.log(q)


@dataclass(frozen=True)
class MomentReport:
    q: int
    direct: float
    double_sum: float
    diagonal_part: float
    off_diagonal_part: float
    small_divisor_part: float
    large_divisor_part: float
    main_term: float
    K_used: float
    ratio: float
    ratio_K_override: float | None
    K_override: float | None
    condition_lhs: float
    condition_rhs: float
    divisor_condition_sum: float
    afe_truncation_N: int
    afe_tail_bound: float
    double_sum_M: int
    runtime_breakdown: dict = field(default_factory=dict, compare=False)

    def canonical(self) -> dict:
        """All fields except timings, which differ from run to run."""
        d = asdict(self)
        d.pop("runtime_breakdown")
        return d


def moment_report(coeffs: EigenformCoefficients, q: int, tol: float = 1e-6,
                  threads: int | None = None, K_override: float | None = None,
                  double_sum: bool = True, budget: int = DEFAULT_BUDGET) -> MomentReport:
    """Both routes, the splits and the main term for one modulus.

    With ``double_sum=False`` the orthogonality route is skipped and its
    fields are NaN.
    """
    if q < 3:
        raise ValueError("moments need q >= 3")
    times = {}
    t0 = time.perf_counter()
    group = build_group(q)
    cv = central_values(coeffs, group, tol)
    direct = math.fsum(np.abs(cv.values[group.primitive_mask]) ** 2)
    times["direct"] = time.perf_counter() - t0

    nan = float("nan")
    if double_sum:
        t0 = time.perf_counter()
        ds = second_moment_double_sum(coeffs, q, threads=threads, budget=budget)
        times["double_sum"] = time.perf_counter() - t0
        parts = (ds.total, ds.diagonal_part, ds.off_diagonal_part,
                 ds.small_divisor_part, ds.large_divisor_part, ds.M)
    else:
        parts = (nan, nan, nan, nan, nan, 0)

    t0 = time.perf_counter()
    K = default_K(coeffs)
    mt = main_term(coeffs, q, K)
    mt_over = main_term(coeffs, q, K_override) if K_override is not None else None
    if q >= 17:
        cond = check_assumption(q)
        c_lhs, c_rhs = cond.lhs, cond.rhs
    else:
        c_lhs = c_rhs = nan
    times["main_term"] = time.perf_counter() - t0

    return MomentReport(
        q=q,
        direct=direct,
        double_sum=parts[0],
        diagonal_part=parts[1],
        off_diagonal_part=parts[2],
        small_divisor_part=parts[3],
        large_divisor_part=parts[4],
        main_term=mt,
        K_used=K,
        ratio=direct / mt if mt else nan,
        ratio_K_override=direct / mt_over if mt_over else None,
        K_override=K_override,
        condition_lhs=c_lhs,
        condition_rhs=c_rhs,
        divisor_condition_sum=divisor_condition_sum(q),
        afe_truncation_N=cv.truncation_N,
        afe_tail_bound=cv.tail_bound,
        double_sum_M=parts[5],
        runtime_breakdown=times,
    )


def fit_secondary_constants(qs, diagonals, coeffs: EigenformCoefficients,
                            K: float | None = None) -> tuple[float, float]:
    """Least-squares K1, K2 in  D(q) - K P_q(1) log q ~ K1 P_q(1) + K2 P_q'(1).

    A diagnostic only: the fitted values carry no guarantee.
    """
    K = K if K is not None else default_K(coeffs)
    rows, rhs = [], []
    for q, D in zip(qs, diagonals):
        ep = euler_product_P(q, 1, coeffs)
        P = ep.at_s.real
        dP = (ep.log_derivative_at_1 * ep.at_s).real
        rows.append([P, dP])
        rhs.append(D - K * P * math.log(q))
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return float(sol[0]), float(sol[1])
