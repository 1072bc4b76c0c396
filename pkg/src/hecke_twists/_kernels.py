"""Compiled inner loops (numba, nogil so thread pools run them in parallel).

All reductions use Neumaier compensation and a fixed iteration order, so the
result of each call is a deterministic function of its arguments.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def fold_by_residue(values, q):
    """out[r] = sum of values[n] over 1 <= n < len(values), n = r mod q (ascending n)."""
    s = np.zeros(q)
    c = np.zeros(q)
    for n in range(1, values.shape[0]):
        r = n % q
        x = values[n]
        t = s[r] + x
        if abs(s[r]) >= abs(x):
            c[r] += (s[r] - t) + x
        else:
            c[r] += (x - t) + s[r]
        s[r] = t
    return s + c


@njit(cache=True, nogil=True)
def _log_hermite(u, u0, du, f, df):
    pos = (u - u0) / du
    i = int(math.floor(pos))
    if i < 0:
        i = 0
    if i > f.shape[0] - 2:
        i = f.shape[0] - 2
    t = pos - i
    t2 = t * t
    t3 = t2 * t
    val = ((2 * t3 - 3 * t2 + 1) * f[i] + (-2 * t3 + 3 * t2) * f[i + 1]
           + du * ((t3 - 2 * t2 + t) * df[i] + (t3 - t2) * df[i + 1]))
    return math.exp(val)


@njit(cache=True, nogil=True)
def pair_sum_chunk(b, ell, M, log_q2, n_lo, n_hi, u0, du, f, df, vlim):
    """Diagonal and off-diagonal pieces of sum b(n) b(m) V(nm/q^2), n = m mod ell.

    Covers n in [n_lo, n_hi) with nm <= M; each unordered pair n < m is counted
    twice.  b must already vanish off the integers coprime to q.
    """
    u_top = u0 + du * (f.shape[0] - 1)
    ds = 0.0
    dc = 0.0
    os_ = 0.0
    oc = 0.0
    for n in range(n_lo, n_hi):
        bn = b[n]
        if bn == 0.0:
            continue
        if n * n <= M:
            u = 2.0 * math.log(n) - log_q2
            if u < u0:
                v = vlim
            elif u > u_top:
                v = 0.0
            else:
                v = _log_hermite(u, u0, du, f, df)
            x = bn * bn * v
            t = ds + x
            if abs(ds) >= abs(x):
                dc += (ds - t) + x
            else:
                dc += (x - t) + ds
            ds = t
        m = n + ell
        ln = math.log(n)
        while n * m <= M:
            bm = b[m]
            if bm != 0.0:
                u = ln + math.log(m) - log_q2
                if u < u0:
                    v = vlim
                elif u > u_top:
                    v = 0.0
                else:
                    v = _log_hermite(u, u0, du, f, df)
                x = 2.0 * bn * bm * v
                t = os_ + x
                if abs(os_) >= abs(x):
                    oc += (os_ - t) + x
                else:
                    oc += (x - t) + os_
                os_ = t
            m += ell
    return ds + dc, os_ + oc
