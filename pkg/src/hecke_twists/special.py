"""Gamma factors and the smooth Mellin kernels V and W_s.

Both kernels are vertical-line integrals evaluated with the trapezoidal rule
on y = c + it, |t| <= T, which converges geometrically for integrands analytic
in a strip.  When no abscissa is given, c is placed near the saddle point of
|integrand| for the given x (to the left of 0 for small x, picking up the
residue at y = 0), so the sum has no cancellation and tail values keep full
relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, loggamma

LOG_2PI = math.log(2 * math.pi)


class QuadratureError(RuntimeError):
    pass


def _is_pole(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def log_gamma(z):
    """Principal branch of log Gamma(z); scalar or array."""
    arr = np.asarray(z, dtype=np.complex128)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.floor(arr.real))
    if np.any(bad):
        raise ValueError("log_gamma has poles at nonpositive integers")
    out = loggamma(arr)
    return complex(out) if out.ndim == 0 else out


def G(s, k: int = 12):
    """Gamma(k/2+s)^2 / ((2 pi)^{2s} Gamma(k/2)^2)."""
    s = np.asarray(s, dtype=np.complex128)
    out = np.exp(2 * (log_gamma(k / 2 + s) - math.lgamma(k / 2)) - 2 * s * LOG_2PI)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SmoothKernel:
    """Quadrature parameters; ``None`` means chosen per x."""

    kind: str = "V"
    k: int = 12
    c: float | None = None
    T: float | None = None
    h: float | None = None
    s: complex = 0j

    def __post_init__(self):
        if self.kind not in ("V", "W"):
            raise ValueError("kind is 'V' or 'W'")
        if self.c is not None and self.c == 0:
            raise ValueError("abscissa must avoid the pole at 0")
        if self.T is not None and self.T <= 0:
            raise ValueError("T must be positive")
        if self.h is not None and self.h <= 0:
            raise ValueError("h must be positive")

    @property
    def step(self) -> float:
        if self.h is not None:
            return self.h
        return 0.05 if self.kind == "V" else 0.02


# -- integrands: log of F(y), the factor multiplying x^{-y} dy/y ---------------

def _logF_V(y: np.ndarray, k: int, s: complex) -> np.ndarray:
    return 2 * (loggamma(k / 2 + y) - math.lgamma(k / 2)) - 2 * y * LOG_2PI


def _logF_W(y: np.ndarray, k: int, s: complex) -> np.ndarray:
    # (2 pi x)^{-y} = (2 pi)^{-y} x^{-y}
    return loggamma(k / 2 + s + y) - loggamma(k / 2 + s) + y * y - y * LOG_2PI


def _saddle_c(kind: str, k: int, s: complex, logx: float) -> float:
    if kind == "V":
        # 2 psi(k/2+c) = 2 log 2pi + log x
        target = LOG_2PI + logx / 2
        lo, hi = -k / 2 + 0.75, 400.0
        f = lambda c: digamma(k / 2 + c) - target
    else:
        # psi(k/2+c) + 2c = log(2 pi x)
        target = LOG_2PI + logx
        lo, hi = -k / 2 + 0.75 - s.real, 400.0
        f = lambda c: digamma(k / 2 + s.real + c) + 2 * c - target
    if f(lo) >= 0:
        c = lo
    elif f(hi) <= 0:
        c = hi
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        c = 0.5 * (lo + hi)
    if abs(c) < 0.5:
        c = 0.5 if c >= 0 else -0.5
    return round(c * 4) / 4


def _height(kind: str, k: int, c: float, s: complex) -> float:
    if kind == "V":
        # |Gamma(a+it)|^2 ~ |t|^{2a-1} e^{-pi|t|}; go well past |t| ~ a
        a = k / 2 + c
        return max(20.0, 1.5 * a + 25.0) + abs(s.imag)
    return 10.0 + abs(c) + abs(s.imag)


_MAX_CELLS = 1 << 21


def _contour(kind: str, k: int, s: complex, logx: np.ndarray, c: float, T: float, h: float,
             divide_by_y: bool = True) -> np.ndarray:
    """(1/(2 pi i)) int_{(c)} F(y) x^{-y} dy/y (or dy) for every x; adds the y=0 residue if c<0."""
    n = int(math.ceil(T / h))
    t = h * np.arange(-n, n + 1)
    y = c + 1j * t
    logF = _logF_V(y, k, s) if kind == "V" else _logF_W(y, k, s)
    if divide_by_y:
        logF = logF - np.log(y)
    edge = np.maximum(np.abs(np.exp(logF[0] - c * logx)), np.abs(np.exp(logF[-1] - c * logx)))
    out = np.empty(len(logx), dtype=np.complex128)
    rows = max(1, _MAX_CELLS // len(t))
    peak = np.empty(len(logx))
    for lo in range(0, len(logx), rows):
        lx = logx[lo : lo + rows, None]
        vals = np.exp(logF[None, :] - y[None, :] * lx)
        out[lo : lo + rows] = vals.sum(axis=1) * (h / (2 * math.pi))
        peak[lo : lo + rows] = np.abs(vals).max(axis=1)
    if np.any(edge > 1e-15 * peak):
        raise QuadratureError(f"contour truncated too early (T={T}, c={c})")
    if c < 0 and divide_by_y:
        out += 1.0  # residue of F(y)/y at y = 0, F(0) = 1
    return out


def _evaluate(kind: str, x, k: int, s: complex, params: SmoothKernel | None,
              divide_by_y: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("kernel argument must be positive")
    params = params or SmoothKernel(kind=kind, k=k, s=s)
    logx = np.log(x).ravel()
    out = np.empty(len(logx), dtype=np.complex128)
    if params.c is not None:
        cs = np.full(len(logx), float(params.c))
    else:
        cs = np.array([_saddle_c(kind, k, s, float(lx)) for lx in logx])
    for c in np.unique(cs):
        sel = cs == c
        T = params.T if params.T is not None else _height(kind, k, c, s)
        out[sel] = _contour(kind, k, s, logx[sel], float(c), T, params.step, divide_by_y)
    return out.reshape(x.shape)


def kernel_V(x, k: int = 12, params: SmoothKernel | None = None):
    """V(x) = (1/(pi i)) int_{(c)} G(y) x^{-y} dy/y.  V(0+) = 2."""
    raw = 2 * _evaluate("V", x, k, 0j, params)
    scale = np.maximum(1.0, np.abs(raw.real))
    if np.any(np.abs(raw.imag) > 1e-10 * scale):
        raise QuadratureError("V quadrature has a non-negligible imaginary part")
    out = raw.real
    return float(out) if np.ndim(out) == 0 else out


def kernel_V_logderiv(x, k: int = 12, params: SmoothKernel | None = None):
    """x V'(x), i.e. dV/d(log x) = -(1/(pi i)) int G(y) x^{-y} dy."""
    out = -2 * _evaluate("V", x, k, 0j, params, divide_by_y=False).real
    return float(out) if np.ndim(out) == 0 else out


def kernel_W(s, x, k: int = 12, params: SmoothKernel | None = None):
    """W_s(x) = (1/(2 pi i)) int Gamma(k/2+s+y)/Gamma(k/2+s) e^{y^2} (2 pi x)^{-y} dy/y."""
    s = complex(s)
    if k / 2 + s.real <= 0:
        raise ValueError("need k/2 + Re(s) > 0")
    out = _evaluate("W", x, k, s, params)
    return complex(out) if np.ndim(out) == 0 else out


def kernel_W_logderiv(s, x, k: int = 12, params: SmoothKernel | None = None):
    out = -_evaluate("W", x, k, complex(s), params, divide_by_y=False)
    return complex(out) if np.ndim(out) == 0 else out


class KernelTable:
    """Cubic Hermite interpolant of a kernel on a geometric grid in x.

    V and W_0 are positive, so log of the value is interpolated (uniform
    relative accuracy into the tail); W_s with s != 0 is interpolated directly.
    Below the grid the kernel is at its x -> 0 limit; above it, 0.
    """

    def __init__(self, kind: str, k: int = 12, s: complex = 0j, x_min: float = 1e-10,
                 x_max: float = 1e7, ratio: float = 1.002):
        self.kind, self.k, self.s = kind, k, complex(s)
        self.du = math.log(ratio)
        self.u0 = math.log(x_min)
        n = int(math.ceil((math.log(x_max) - self.u0) / self.du)) + 1
        self.u = self.u0 + self.du * np.arange(n)
        x = np.exp(self.u)
        if kind == "V":
            val = kernel_V(x, k)
            der = kernel_V_logderiv(x, k)
            self.limit = 2.0
        else:
            val = kernel_W(self.s, x, k)
            der = kernel_W_logderiv(self.s, x, k)
            self.limit = 1.0
        self.log_mode = kind == "V" or self.s == 0
        if self.log_mode:
            val = np.real(val)
            der = np.real(der)
            if np.any(val <= 0):
                # underflow far out in the tail: cut the grid there
                stop = int(np.argmax(val <= 0))
                val, der, self.u = val[:stop], der[:stop], self.u[:stop]
            self.f = np.log(val)
            self.df = der / val
        else:
            self.f = val
            self.df = der
        self.u_max = float(self.u[-1])
        self.x_max = math.exp(self.u_max)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        u = np.log(x)
        pos = (u - self.u0) / self.du
        i = np.clip(np.floor(pos).astype(np.int64), 0, len(self.u) - 2)
        t = pos - i
        t2, t3 = t * t, t * t * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        f = (h00 * self.f[i] + h01 * self.f[i + 1]
             + self.du * (h10 * self.df[i] + h11 * self.df[i + 1]))
        if self.log_mode:
            f = np.exp(f)
        f = np.where(u < self.u0, self.limit, f)
        f = np.where(u > self.u_max, 0.0, f)
        return f

    def x_below(self, level: float) -> float:
        """Smallest grid x beyond which |kernel| stays below ``level``."""
        mag = np.exp(self.f) if self.log_mode else np.abs(self.f)
        above = np.nonzero(mag > level)[0]
        if len(above) == 0:
            return math.exp(self.u0)
        j = above[-1] + 1
        return math.exp(self.u[min(j, len(self.u) - 1)])


@lru_cache(maxsize=32)
def kernel_table(kind: str, k: int = 12, s: complex = 0j, x_max: float = 1e7) -> KernelTable:
    return KernelTable(kind, k, s, x_max=x_max)
