import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hecke_twists.arith import euler_phi, orthogonality_rhs, primitive_count
from hecke_twists.characters import (
    CharacterGroup,
    build_group,
    conductor,
    gauss_sum,
    root_number,
    root_numbers,
)


def brute_conductor(chi):
    """Least d | q with chi trivial on units n = 1 mod d."""
    q = chi.modulus
    vals = chi.values()
    for d in range(1, q + 1):
        if q % d:
            continue
        if all(abs(vals[n] - 1) < 1e-9 for n in range(1, q, d) if math.gcd(n, q) == 1):
            return d
    raise AssertionError


def brute_gauss(chi):
    q = chi.modulus
    vals = chi.values()
    return sum(vals[a] * cmath.exp(2j * math.pi * a / q) for a in range(q))


@pytest.mark.parametrize("q", [1, 2, 3, 4, 5, 8, 12, 16, 24, 45, 60, 64, 105, 128, 243, 360])
def test_group_structure(q):
    g = build_group(q)
    assert len(g) == euler_phi(q)
    table = np.array([chi.values() for chi in g.characters()])
    # all characters distinct, and orthogonal over units
    gram = table @ table.conj().T
    np.testing.assert_allclose(gram, euler_phi(q) * np.eye(len(g)), atol=1e-8)
    units = [r for r in range(q) if math.gcd(r, q) == 1]
    for chi in g.characters():
        v = chi.values()
        assert all(v[r] == 0 for r in range(q) if math.gcd(r, q) != 1)
        for a in units[:12]:
            for b in units[:12]:
                assert abs(v[a * b % q] - v[a] * v[b]) < 1e-12
        assert chi(q + 1) == pytest.approx(v[1 % q])
        assert conductor(chi) == brute_conductor(chi)
        assert chi.conjugate().values() == pytest.approx(v.conj())
        assert chi.parity() == (1 if (q <= 2 or v[q - 1].real > 0) else -1)


def test_conductors_broad():
    for q in range(1, 200):
        g = CharacterGroup(q)
        for chi in g.characters():
            assert chi.conductor == brute_conductor(chi), (q, chi.index)


def test_generator_examples():
    assert build_group(5).components[0].generator == 2
    gens = [c.generator for c in build_group(8).components]
    assert gens == [7, 5]


def test_gauss_sums_examples():
    g5 = build_group(5)
    quad = [chi for chi in g5.characters() if chi.is_real and chi.index != 0][0]
    assert gauss_sum(quad) == pytest.approx(math.sqrt(5))
    chi3 = build_group(3).character(1)
    assert gauss_sum(chi3) == pytest.approx(1j * math.sqrt(3))
    assert root_number(chi3, 12) == pytest.approx(-1)


@pytest.mark.parametrize("q", [7, 9, 20, 32, 77, 100])
def test_gauss_sums_match_direct(q):
    g = build_group(q)
    for chi in g.characters():
        assert chi.gauss_sum == pytest.approx(brute_gauss(chi), abs=1e-9)


def test_root_numbers():
    g = build_group(13)
    rn = root_numbers(g, 12)
    assert np.isnan(rn[0])
    for chi in g.primitive_characters():
        assert abs(rn[chi.index]) == pytest.approx(1)
        assert root_number(chi, 12) * root_number(chi.conjugate(), 12) == pytest.approx(1)
    with pytest.raises(ValueError):
        root_number(g.character(0), 12)


def test_primitive_census_small():
    for q in range(1, 600):
        assert int(CharacterGroup(q).primitive_mask.sum()) == primitive_count(q)


def test_index_roundtrip():
    g = build_group(360)
    for i in (0, 1, 17, len(g) - 1):
        assert g.index_of(g.exponents(i)) == i
    with pytest.raises(IndexError):
        g.character(len(g))
    with pytest.raises(ValueError):
        CharacterGroup(0)


@given(st.integers(3, 300), st.integers(1, 10**6), st.integers(1, 10**6))
@settings(max_examples=200, deadline=None)
def test_orthogonality_over_primitive(q, n, m):
    if math.gcd(n * m, q) != 1:
        return
    g = build_group(q)
    total = sum(chi(n) * chi(m).conjugate() for chi in g.primitive_characters())
    assert abs(total - orthogonality_rhs(n, m, q)) <= 1e-8 * euler_phi(q)
