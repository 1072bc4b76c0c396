"""Dirichlet characters modulo q.

(Z/qZ)* is split by the CRT into cyclic components: one per odd prime power
p^e, and for 2^e either nothing (e = 1), <-1> (e = 2) or <-1> x <5> (e >= 3).
A character is an exponent vector e with chi(g_c) = exp(2 pi i e_c / ord_c) on
the component generators.  Discrete logarithms are table lookups.

Sums over the whole group, sum_r B(r) chi(r) for every chi at once, are
multidimensional DFTs in the discrete-log coordinates; Gauss sums and the
moment sweep both use this.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from sympy.ntheory import primitive_root

from .arith import Factorization, factorize


@dataclass(frozen=True)
class Component:
    prime: int
    exponent: int
    modulus: int      # p^e
    generator: int    # element of (Z/qZ)*, = 1 at the other prime powers
    order: int


def _crt_lift(g: int, m: int, q: int) -> int:
    """x = g mod m and x = 1 mod q/m."""
    rest = q // m
    if rest == 1:
        return g % q
    return (g * rest * pow(rest, -1, m) + m * pow(m, -1, rest)) % q


class CharacterGroup:
    """The characters modulo q, enumerated lexicographically in exponent vectors."""

    def __init__(self, q: int):
        q = int(q)
        if q < 1:
            raise ValueError("modulus must be positive")
        self.modulus = q
        self.factorization: Factorization = factorize(q)
        comps: list[Component] = []
        local_logs: list[np.ndarray] = []
        for p, e in self.factorization.factors:
            m = p**e
            if p == 2:
                if e == 1:
                    continue
                logs_m1 = np.full(m, -1, dtype=np.int64)
                odd = np.arange(1, m, 2)
                logs_m1[odd] = np.where(odd % 4 == 1, 0, 1)
                comps.append(Component(2, e, m, _crt_lift(m - 1, m, q), 2))
                local_logs.append(logs_m1)
                if e >= 3:
                    order = 2 ** (e - 2)
                    logs5 = np.full(m, -1, dtype=np.int64)
                    x = 1
                    for j in range(order):
                        logs5[x] = j
                        logs5[m - x] = j
                        x = x * 5 % m
                    comps.append(Component(2, e, m, _crt_lift(5, m, q), order))
                    local_logs.append(logs5)
            else:
                g = primitive_root(m)
                order = m // p * (p - 1)
                logs = np.full(m, -1, dtype=np.int64)
                x = 1
                for j in range(order):
                    logs[x] = j
                    x = x * g % m
                comps.append(Component(p, e, m, _crt_lift(g, m, q), order))
                local_logs.append(logs)
        self.components: tuple[Component, ...] = tuple(comps)
        self.orders: tuple[int, ...] = tuple(c.order for c in comps)
        r = np.arange(q)
        self.logs = np.stack([lg[r % c.modulus] for c, lg in zip(comps, local_logs)]) \
            if comps else np.zeros((0, q), dtype=np.int64)
        units = np.array([math.gcd(int(x), q) == 1 for x in r]) if q > 1 else np.array([True])
        self.units = units
        # position of each unit residue in the flattened log-coordinate array
        flat = np.full(q, -1, dtype=np.int64)
        if comps:
            flat[units] = np.ravel_multi_index(tuple(self.logs[:, units]), self.orders)
        else:
            flat[units] = 0
        self.flat_index = flat
        self._local_conductors = [self._component_conductors(c) for c in comps]

    def __len__(self) -> int:
        return math.prod(self.orders)

    @property
    def phi(self) -> int:
        return len(self)

    # -- conductors -------------------------------------------------------
    def _component_conductors(self, c: Component) -> np.ndarray:
        """Local conductor exponent contribution, as a factor of the conductor."""
        out = np.ones(c.order, dtype=np.int64)
        p, e = c.prime, c.exponent
        if p == 2 and c.generator % c.modulus == c.modulus - 1:
            # the <-1> factor: nontrivial means conductor 4
            out[1] = 4
            return out
        for x in range(1, c.order):
            v = 0
            y = x
            while y % p == 0:
                y //= p
                v += 1
            j = e - v
            out[x] = p**j
        return out

    @cached_property
    def conductors(self) -> np.ndarray:
        """Conductor of each character, flattened in enumeration order."""
        if not self.components:
            return np.ones(1, dtype=np.int64)
        total = np.ones(1, dtype=np.int64)
        two_power = None
        for c, loc in zip(self.components, self._local_conductors):
            if c.prime == 2:
                # the <-1> and <5> parts share the prime 2: conductor is the larger
                if two_power is None:
                    two_power = loc
                    continue
                combined = np.maximum.outer(two_power, loc)
                total = np.multiply.outer(total, combined).ravel()
                two_power = None
                continue
            if two_power is not None:
                total = np.multiply.outer(total, two_power).ravel()
                two_power = None
            total = np.multiply.outer(total, loc).ravel()
        if two_power is not None:
            total = np.multiply.outer(total, two_power).ravel()
        return total

    @cached_property
    def primitive_mask(self) -> np.ndarray:
        return self.conductors == self.modulus

    # -- group-wide transforms -------------------------------------------
    def character_sums(self, values_by_residue: np.ndarray) -> np.ndarray:
        """sum_r B(r) chi(r) over units r, for every character (enumeration order)."""
        B = np.asarray(values_by_residue)
        arr = np.zeros(len(self), dtype=np.complex128)
        np.add.at(arr, self.flat_index[self.units], B[self.units])
        if not self.components:
            return arr
        out = np.fft.ifftn(arr.reshape(self.orders)) * len(self)
        return out.ravel()

    @cached_property
    def gauss_sums(self) -> np.ndarray:
        q = self.modulus
        e_q = np.exp(2j * np.pi * np.arange(q) / q)
        return self.character_sums(e_q)

    # -- enumeration ------------------------------------------------------
    def exponents(self, index: int) -> tuple[int, ...]:
        if not self.components:
            return ()
        return tuple(int(x) for x in np.unravel_index(index, self.orders))

    def index_of(self, exponents) -> int:
        if not self.components:
            return 0
        return int(np.ravel_multi_index(tuple(exponents), self.orders))

    def character(self, index: int) -> "DirichletCharacter":
        if not 0 <= index < len(self):
            raise IndexError(f"character index {index} out of range for q={self.modulus}")
        return DirichletCharacter(self, index)

    def characters(self):
        for i in range(len(self)):
            yield DirichletCharacter(self, i)

    def primitive_characters(self):
        for i in np.nonzero(self.primitive_mask)[0]:
            yield DirichletCharacter(self, int(i))


_GROUPS: dict[int, CharacterGroup] = {}


def build_group(q: int) -> CharacterGroup:
    """Character group mod q (memoised; groups are immutable)."""
    g = _GROUPS.get(q)
    if g is None:
        g = CharacterGroup(q)
        if q <= 10**5:
            _GROUPS[q] = g
    return g


@dataclass(frozen=True)
class DirichletCharacter:
    group: CharacterGroup
    index: int

    @property
    def modulus(self) -> int:
        return self.group.modulus

    @property
    def exponents(self) -> tuple[int, ...]:
        return self.group.exponents(self.index)

    @property
    def conductor(self) -> int:
        return int(self.group.conductors[self.index])

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    @property
    def gauss_sum(self) -> complex:
        return complex(self.group.gauss_sums[self.index])

    def conjugate(self) -> "DirichletCharacter":
        neg = tuple((-e) % o for e, o in zip(self.exponents, self.group.orders))
        return DirichletCharacter(self.group, self.group.index_of(neg))

    @property
    def is_real(self) -> bool:
        return self.conjugate().index == self.index

    def values(self) -> np.ndarray:
        """chi(r) for r = 0..q-1."""
        g = self.group
        out = np.zeros(g.modulus, dtype=np.complex128)
        phase = np.zeros(int(g.units.sum()))
        for e, o, lg in zip(self.exponents, g.orders, g.logs):
            if e:
                phase += e * lg[g.units] / o
        out[g.units] = np.exp(2j * np.pi * phase)
        return out

    def __call__(self, n: int) -> complex:
        g = self.group
        r = int(n) % g.modulus
        if not g.units[r]:
            return 0j
        phase = sum(e * int(lg[r]) / o for e, o, lg in zip(self.exponents, g.orders, g.logs))
        return cmath.exp(2j * math.pi * phase)

    def parity(self) -> int:
        """chi(-1) as +1 or -1."""
        return 1 if self(-1).real > 0 else -1


def conductor(chi: DirichletCharacter) -> int:
    return chi.conductor


def gauss_sum(chi: DirichletCharacter) -> complex:
    return chi.gauss_sum


def root_number(chi: DirichletCharacter, k: int) -> complex:
    """i^k tau(chi)^2 / q; defined for primitive chi only."""
    if not chi.is_primitive:
        raise ValueError("root number needs a primitive character")
    return (1j ** (k % 4)) * chi.gauss_sum**2 / chi.modulus


def root_numbers(group: CharacterGroup, k: int) -> np.ndarray:
    """Root numbers of all characters (NaN where imprimitive)."""
    out = (1j ** (k % 4)) * group.gauss_sums**2 / group.modulus
    return np.where(group.primitive_mask, out, np.nan)
