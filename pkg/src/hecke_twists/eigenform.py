"""Hecke eigenvalues of a level-1 eigenform.

The discriminant form Delta = x prod (1 - x^n)^24 is expanded exactly.  Since
tau(n) outgrows 64 bits long before the tables needed for moment sums, the
series is computed modulo several word-size primes (FLINT ``nmod_poly``) and the
integers are recovered with Garner's mixed-radix CRT.  The normalised
coefficients a_f(n) = tau(n) / n^((k-1)/2) come out of the mixed-radix digits
directly in floating point; exact integers are reconstructed on demand.
"""
from __future__ import annotations

import logging
import math
import os
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import flint
import numpy as np

from .arith import divisor_count_table

log = logging.getLogger(__name__)

# primes just below 2^31; products of two residues fit in int64
_CRT_PRIMES = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563,
               2147483549, 2147483543, 2147483497)

EXACT_LIMIT = 10**6
TAU_MAGIC = b"TAU1"


def _n_primes(N: int) -> int:
    # |tau(n)| <= d(n) n^{11/2} <= 2 n^6; one more bit for the sign
    bits = 6 * math.log2(max(N, 2)) + 3
    return max(2, math.ceil(bits / 30.9))


def _delta_series_mod(N: int, p: int) -> np.ndarray:
    """Coefficients of prod (1-x^n)^24 mod p, degrees 0..N-1 (i.e. tau(1..N))."""
    c = [0] * N
    k = 0
    while k * (k + 1) // 2 < N:
        c[k * (k + 1) // 2] = ((-1) ** k * (2 * k + 1)) % p
        k += 1
    # Jacobi: prod (1-x^n)^3 = sum (-1)^k (2k+1) x^{k(k+1)/2}; cube-of-eta to the 8th
    J = flint.nmod_poly(c, p)
    del c
    A = J.mul_low(J, N)
    A = A.mul_low(A, N)
    A = A.mul_low(A, N)
    out = np.zeros(N, dtype=np.int64)
    co = A.coeffs()
    out[: len(co)] = co
    return out


class _MixedRadix:
    """tau(n) as sign + mixed-radix digits of |tau(n)| w.r.t. the CRT primes.

    Residues are folded in one prime at a time (Garner), so only the int32
    digit arrays stay resident.
    """

    _CHUNK = 1 << 20

    def __init__(self, N: int, n_primes: int):
        self.primes = _CRT_PRIMES[:n_primes]
        self.digits: list[np.ndarray] = []
        for i, p in enumerate(self.primes):
            r = _delta_series_mod(N, p)
            for lo in range(0, N, self._CHUNK):
                t = r[lo : lo + self._CHUNK]
                for j in range(i):
                    t = (t - self.digits[j][lo : lo + self._CHUNK]) % p
                    t = (t * pow(self.primes[j], -1, p)) % p
                r[lo : lo + self._CHUNK] = t
            self.digits.append(r.astype(np.int32))
            del r
        self._normalize_sign(N)

    def _normalize_sign(self, N: int) -> None:
        M = math.prod(self.primes)
        half = (M + 1) // 2
        hd = []
        for p in self.primes:
            hd.append(half % p)
            half //= p
        # value >= ceil(M/2) means the residue class represents a negative integer
        neg = np.zeros(N, dtype=bool)
        undecided = np.ones(N, dtype=bool)
        for i in reversed(range(len(self.primes))):
            gt = self.digits[i] > hd[i]
            lt = self.digits[i] < hd[i]
            neg |= undecided & gt
            undecided &= ~(gt | lt)
        neg |= undecided
        # |value| = M - value = digit complement plus one
        carry = neg.astype(np.int64)
        for i, p in enumerate(self.primes):
            d = self.digits[i].astype(np.int64)
            d = np.where(neg, p - 1 - d, d) + carry
            wrap = d >= p
            carry = (wrap & neg).astype(np.int64)
            self.digits[i] = np.where(wrap, d - p, d).astype(np.int32)
        self.negative = neg

    def as_float(self) -> np.ndarray:
        radix = 1
        val = np.zeros(len(self.negative))
        for i, p in enumerate(self.primes):
            val += self.digits[i] * float(radix)
            radix *= p
        return np.where(self.negative, -val, val)

    def exact(self, idx: int) -> int:
        radix = 1
        v = 0
        for i, p in enumerate(self.primes):
            v += int(self.digits[i][idx]) * radix
            radix *= p
        return -v if self.negative[idx] else v


@dataclass(frozen=True)
class EigenformCoefficients:
    """Normalised Hecke eigenvalues a[n], n = 1..length (a[0] is unused).

    ``exact`` holds integer eigenvalues tau(n) for n <= len(exact) when known.
    """

    weight: int
    a: np.ndarray
    exact: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.a.setflags(write=False)

    @property
    def length(self) -> int:
        return len(self.a) - 1

    def tau(self, n: int) -> int:
        if self.exact is None or not 1 <= n <= len(self.exact):
            raise IndexError(f"exact eigenvalue for n={n} not available")
        return self.exact[n - 1]

    def truncated(self, N: int) -> "EigenformCoefficients":
        if N > self.length:
            raise ValueError(f"table has only {self.length} coefficients")
        ex = self.exact[:N] if self.exact is not None else None
        return EigenformCoefficients(self.weight, self.a[: N + 1].copy(), ex)


def delta_tau(N: int) -> list[int]:
    """Exact tau(1..N)."""
    mr = _MixedRadix(N, _n_primes(N))
    return [mr.exact(i) for i in range(N)]


def delta_coefficients(N: int, exact_limit: int = EXACT_LIMIT) -> EigenformCoefficients:
    """Coefficient table of Delta (weight 12) for n <= N."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be positive")
    r = _n_primes(N)
    log.info("expanding Delta to N=%d modulo %d primes", N, r)
    mr = _MixedRadix(N, r)
    tau_f = mr.as_float()
    n = np.arange(1, N + 1, dtype=np.float64)
    a = np.empty(N + 1)
    a[0] = 0.0
    a[1:] = tau_f / n**5.5
    exact = tuple(mr.exact(i) for i in range(min(N, exact_limit)))
    return EigenformCoefficients(12, a, exact)


def _spf_table(N: int) -> np.ndarray:
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            blk = spf[p * p :: p]
            blk[blk == 0] = p
            spf[p * p :: p] = blk
    idx = np.arange(N + 1)
    spf[spf == 0] = idx[spf == 0]
    return spf


def hecke_extend(prime_values: Mapping[int, float], N: int, k: int) -> EigenformCoefficients:
    """Fill a(n), n <= N, from a(p) by multiplicativity and the Hecke recursion."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be positive")
    if k < 12 or k % 2:
        raise ValueError("weight must be an even integer >= 12")
    spf = _spf_table(N)
    a = np.zeros(N + 1)
    if N >= 1:
        a[1] = 1.0
    for n in range(2, N + 1):
        p = int(spf[n])
        if p == n:
            if p not in prime_values:
                raise KeyError(f"missing a(p) for p={p}")
            a[p] = float(prime_values[p])
            if abs(a[p]) > 2:
                warnings.warn(f"|a({p})| = {abs(a[p]):.6g} exceeds the Deligne bound 2")
            continue
        m, pe = n, 1
        while m % p == 0:
            m //= p
            pe *= p
        if m > 1:
            a[n] = a[pe] * a[m]
        else:
            a[n] = a[p] * a[n // p] - a[n // (p * p)]
    return EigenformCoefficients(k, a)


def verify_deligne(coeffs: EigenformCoefficients, slack: float = 1e-12) -> list[int]:
    """All n with |a(n)| > d(n) + slack."""
    N = coeffs.length
    if N < 1:
        return []
    d = divisor_count_table(N)
    bad = np.nonzero(np.abs(coeffs.a[1:]) > d[1:] + slack)[0] + 1
    return [int(n) for n in bad]


def load_prime_values(path) -> dict[int, float]:
    """Read "p a_f(p)" lines; '#' starts a comment line."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'p a_f(p)'")
            out[int(parts[0])] = float(parts[1])
    return out


def write_tau_cache(path, coeffs: EigenformCoefficients) -> None:
    """Binary cache: b"TAU1", u32 weight, u64 N, N little-endian signed int128."""
    if coeffs.exact is None or len(coeffs.exact) < coeffs.length:
        raise ValueError("exact eigenvalues are required for the tau cache")
    N = coeffs.length
    buf = bytearray(TAU_MAGIC)
    buf += struct.pack("<IQ", coeffs.weight, N)
    for t in coeffs.exact[:N]:
        buf += int(t).to_bytes(16, "little", signed=True)
    Path(path).write_bytes(bytes(buf))


def read_tau_cache(path) -> EigenformCoefficients:
    raw = Path(path).read_bytes()
    if raw[:4] != TAU_MAGIC:
        raise ValueError(f"{path}: not a TAU1 cache")
    k, N = struct.unpack_from("<IQ", raw, 4)
    off = 16
    if len(raw) != off + 16 * N:
        raise ValueError(f"{path}: truncated cache")
    tau = tuple(int.from_bytes(raw[off + 16 * i : off + 16 * (i + 1)], "little", signed=True)
                for i in range(N))
    n = np.arange(1, N + 1, dtype=np.float64)
    a = np.empty(N + 1)
    a[0] = 0.0
    a[1:] = np.array([float(t) for t in tau]) / n ** ((k - 1) / 2)
    return EigenformCoefficients(k, a, tau)


def cache_dir() -> Path:
    d = os.environ.get("HECKE_TWISTS_CACHE")
    return Path(d) if d else Path.home() / ".cache" / "hecke_twists"


def load_delta(N: int, use_cache: bool = True) -> EigenformCoefficients:
    """Delta coefficients for n <= N, reusing the largest cached float table."""
    N = int(N)
    if not use_cache:
        return delta_coefficients(N)
    d = cache_dir()
    best = None
    if d.is_dir():
        for f in d.glob("delta_a_*.npy"):
            try:
                M = int(f.stem.rsplit("_", 1)[1])
            except ValueError:
                continue
            if M >= N and (best is None or M < best[0]):
                best = (M, f)
    if best is not None:
        a = np.load(best[1], mmap_mode="r")[: N + 1].copy()
        exact = tuple(delta_tau(min(N, 2000)))
        return EigenformCoefficients(12, a, exact)
    coeffs = delta_coefficients(N)
    try:
        d.mkdir(parents=True, exist_ok=True)
        tmp = d / f".delta_a_{N}.{os.getpid()}.npy"
        np.save(tmp, coeffs.a)
        tmp.replace(d / f"delta_a_{N}.npy")
    except OSError as exc:
        log.warning("could not write coefficient cache: %s", exc)
    return coeffs
