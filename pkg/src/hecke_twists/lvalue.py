"""Central values L(f x chi, 1/2 + s) on the critical line.

For primitive chi mod q and Re(s) = 0,

    L(f x chi, 1/2+s) = sum_n a(n) chi(n) n^{-1/2-s} W_s(n/q)
                        + iota_chi X(s) sum_n a(n) conj(chi)(n) n^{-1/2+s} W_{-s}(n/q),

with iota_chi = i^k tau(chi)^2 / q and X(s) = (2pi)^{2s} Gamma(k/2-s) / (q^{2s} Gamma(k/2+s)).

The kernel W_s carries a factor e^{y^2}, so it decays only log-normally in x
(W_0(100) ~ 6e-4, W_0(1e4) ~ 1e-10); the sums are truncated where a
mean-value estimate of the neglected terms drops below ``tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import fold_by_residue
from .characters import CharacterGroup, DirichletCharacter, root_number, root_numbers
from .eigenform import EigenformCoefficients
from .special import LOG_2PI, SmoothKernel, kernel_table, kernel_W, log_gamma

EULER_GAMMA = 0.5772156649015329


class TableTooShort(ValueError):
    """The coefficient table does not reach the required truncation length."""


@dataclass(frozen=True)
class LValueResult:
    value: complex
    s: complex
    q: int
    truncation_N: int
    tail_bound: float
    eps_trunc: float
    params_used: dict = field(default_factory=dict)


def _check_critical(s: complex) -> complex:
    s = complex(s)
    if s.real != 0:
        raise ValueError("the approximate functional equation is used on Re(s) = 0 only")
    return s


def afe_length(q: int, s: complex = 0j, k: int = 12, tol: float = 1e-8) -> tuple[int, float]:
    """Truncation N and the estimated size of the dropped terms.

    The estimate replaces |a(n)| by d(n) (Deligne) and d(n) by its mean density
    log n + 2 gamma, integrated against |W_s(n/q)| + |W_{-s}(n/q)| beyond N.
    """
    s = complex(s)
    tabs = [kernel_table("W", k, s)]
    if s != 0:
        tabs.append(kernel_table("W", k, -s))
    u = tabs[0].u
    mag = sum(np.exp(t.f) if t.log_mode else np.abs(t.f) for t in tabs)
    if s == 0:
        mag = 2 * mag
    g = (math.log(q) + u + 2 * EULER_GAMMA) * np.exp(u / 2) * mag * math.sqrt(q)
    # tail[i] = integral of g over [u_i, u_max], trapezoid on the grid
    seg = 0.5 * (g[1:] + g[:-1]) * tabs[0].du
    tail = np.append(np.cumsum(seg[::-1])[::-1], 0.0)
    ok = np.nonzero(tail <= tol)[0]
    i = int(ok[0])
    x0 = math.exp(u[i])
    N = max(1, math.ceil(q * x0))
    return N, float(tail[i])


def _root(chi: DirichletCharacter, k: int) -> complex:
    if chi.modulus == 1:
        return complex(1j ** (k % 4))
    return root_number(chi, k)


def _gamma_ratio(s: complex, q: int, k: int) -> complex:
    """(2pi)^{2s} Gamma(k/2-s) / (q^{2s} Gamma(k/2+s))."""
    return complex(np.exp(2 * s * LOG_2PI - 2 * s * math.log(q)
                          + log_gamma(k / 2 - s) - log_gamma(k / 2 + s)))


def _kernel_values(s: complex, x: np.ndarray, k: int, params: SmoothKernel | None) -> np.ndarray:
    if params is None:
        return np.asarray(kernel_table("W", k, s)(x), dtype=np.complex128)
    p = SmoothKernel("W", k, params.c, params.T, params.h, s)
    return np.asarray(kernel_W(s, x, k, p), dtype=np.complex128)


def _twisted_sum(coeffs, chi_vals: np.ndarray, q: int, s: complex, N: int, k: int,
                 params: SmoothKernel | None) -> complex:
    n = np.arange(1, N + 1, dtype=np.float64)
    w = _kernel_values(s, n / q, k, params)
    c = coeffs.a[1 : N + 1] * np.exp(-(0.5 + s) * np.log(n)) * w
    re = np.concatenate(([0.0], c.real))
    im = np.concatenate(([0.0], c.imag))
    B = fold_by_residue(re, q) + 1j * fold_by_residue(im, q)
    prod = B * chi_vals
    return complex(math.fsum(prod.real), math.fsum(prod.imag))


def l_value_afe(coeffs: EigenformCoefficients, chi: DirichletCharacter, s: complex = 0j,
                tol: float = 1e-8, params: SmoothKernel | None = None) -> LValueResult:
    """L(f x chi, 1/2 + s) for primitive chi and Re(s) = 0."""
    s = _check_critical(s)
    if not chi.is_primitive:
        raise ValueError("the approximate functional equation needs a primitive character")
    q, k = chi.modulus, coeffs.weight
    N, tail = afe_length(q, s, k, tol)
    if N > coeffs.length:
        raise TableTooShort(f"need {N} coefficients for q={q}, table has {coeffs.length}")
    vals = chi.values()
    first = _twisted_sum(coeffs, vals, q, s, N, k, params)
    second = _twisted_sum(coeffs, np.conj(vals), q, -s, N, k, params)
    value = first + _root(chi, k) * _gamma_ratio(s, q, k) * second
    eps = math.log(N) / math.log(q) - 1 if q > 1 else float("inf")
    used = {"kernel": "table" if params is None else "quadrature",
            "c": None if params is None else params.c,
            "T": None if params is None else params.T,
            "h": None if params is None else params.step,
            "tol": tol}
    return LValueResult(value, s, q, N, tail, eps, used)


def fe_residual(coeffs: EigenformCoefficients, chi: DirichletCharacter, s: complex = 0j,
                tol: float = 1e-8) -> float:
    """Relative mismatch of the two sides of the functional equation at 1/2 + s.

    The denominator is floored at tol |Gamma(k/2+s)|, the size of the
    truncation noise on either side, so a value forced to vanish reads as a
    match instead of a ratio of rounding errors.
    """
    s = _check_critical(s)
    if not chi.is_primitive:
        raise ValueError("the functional equation needs a primitive character")
    q, k = chi.modulus, coeffs.weight
    L1 = l_value_afe(coeffs, chi, s, tol).value
    L2 = l_value_afe(coeffs, chi.conjugate(), -s, tol).value
    lq = math.log(q / (2 * math.pi))
    lhs = complex(np.exp(s * lq + log_gamma(k / 2 + s))) * L1
    rhs = _root(chi, k) * complex(np.exp(-s * lq + log_gamma(k / 2 - s))) * L2
    floor = tol * abs(complex(np.exp(log_gamma(k / 2 + s))))
    return abs(lhs - rhs) / (max(abs(lhs) + abs(rhs), floor) + 1e-300)


def euler_local_factor(coeffs: EigenformCoefficients, chi: DirichletCharacter, p: int,
                       s: complex = 0j) -> complex:
    """1 - a(p) chi(p) p^{-s-1/2} + chi(p)^2 p^{-2s-1}."""
    cp = chi(p)
    if cp == 0:
        return 1 + 0j
    s = complex(s)
    return 1 - coeffs.a[p] * cp * p ** (-s - 0.5) + cp * cp * p ** (-2 * s - 1)


def l_series_partial(coeffs: EigenformCoefficients, chi: DirichletCharacter, s: complex,
                     N: int) -> complex:
    """sum_{n <= N} a(n) chi(n) n^{-s}, for Re(s) >= 3/2 where it converges absolutely."""
    s = complex(s)
    if s.real < 1.5:
        raise ValueError("partial Dirichlet series used only for Re(s) >= 3/2")
    if N > coeffs.length:
        raise TableTooShort(f"need {N} coefficients, table has {coeffs.length}")
    n = np.arange(1, N + 1)
    terms = coeffs.a[1 : N + 1] * chi.values()[n % chi.modulus] * np.exp(-s * np.log(n))
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def series_tail_bound(s: complex, N: int) -> float:
    """Bound for sum_{n > N} d(n) n^{-Re s} (d(n) <= 2 sqrt(n))."""
    sig = complex(s).real
    return 2 * N ** (1.5 - sig) / (sig - 1.5) if sig > 1.5 else float("inf")


@dataclass(frozen=True)
class CentralValues:
    """L(f x chi, 1/2) for every character of a group (NaN where imprimitive)."""

    group: CharacterGroup
    values: np.ndarray
    truncation_N: int
    tail_bound: float


def central_values(coeffs: EigenformCoefficients, group: CharacterGroup,
                   tol: float = 1e-8) -> CentralValues:
    """All primitive central values mod q at once.

    At s = 0 both halves of the approximate functional equation use the same
    real weights b(n) = a(n) W_0(n/q) / sqrt(n), so L(chi) = A(chi) + iota_chi
    conj(A(chi)) with A(chi) = sum_r B(r) chi(r), B the residue-class sums of b.
    A is obtained for all chi by one DFT over the group.
    """
    q, k = group.modulus, coeffs.weight
    N, tail = afe_length(q, 0j, k, tol)
    if N > coeffs.length:
        raise TableTooShort(f"need {N} coefficients for q={q}, table has {coeffs.length}")
    n = np.arange(1, N + 1, dtype=np.float64)
    b = np.empty(N + 1)
    b[0] = 0.0
    b[1:] = coeffs.a[1 : N + 1] * kernel_table("W", k, 0j)(n / q) / np.sqrt(n)
    B = fold_by_residue(b, q)
    A = group.character_sums(B)
    iota = root_numbers(group, k) if q > 1 else np.array([1j ** (k % 4)])
    L = A + iota * np.conj(A)
    return CentralValues(group, L, N, tail)
