import math
import random

import numpy as np
import pytest
from sympy import primerange

from hecke_twists import eigenform as ef
from hecke_twists.arith import divisor_count_table

KNOWN_TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920,
             534612, -370944, -577738, 401856, 1217160, 987136]


def _naive_tau(N):
    """Integer expansion of x prod (1 - x^n)^24 by 24 sparse multiplications per factor."""
    c = [0] * N
    c[0] = 1
    for n in range(1, N):
        for _ in range(24):
            for i in range(N - 1, n - 1, -1):
                c[i] -= c[i - n]
    return c


def test_known_values(delta_small):
    assert [delta_small.tau(n) for n in range(1, 17)] == KNOWN_TAU
    assert delta_small.tau(23) == 18643272
    assert delta_small.a[1] == 1.0


def test_matches_naive_expansion():
    assert ef.delta_tau(300) == _naive_tau(300)


def test_exact_vs_float(delta_small):
    for n in (1, 97, 1000, 65536, 99991):
        t = delta_small.tau(n)
        assert delta_small.a[n] == pytest.approx(t / n**5.5, rel=1e-15)


def test_large_n_uses_bigints():
    # values past 2^63 must still be exact: check multiplicativity there
    N = 5000
    t = ef.delta_tau(N)
    assert abs(t[4998 - 1]) > 2**63
    assert t[4998 - 1] == t[2 - 1] * t[2499 - 1]


def test_multiplicativity(delta_small):
    rng = random.Random(3)
    done = 0
    while done < 2000:
        m, n = rng.randint(2, 300), rng.randint(2, 300)
        if math.gcd(m, n) == 1:
            assert delta_small.tau(m * n) == delta_small.tau(m) * delta_small.tau(n)
            done += 1


def test_hecke_recursion_exact(delta_small):
    N = 100_000
    for p in primerange(2, 400):
        pj = p
        while pj * p <= N:
            lhs = delta_small.tau(pj * p)
            rhs = delta_small.tau(p) * delta_small.tau(pj) - p**11 * (delta_small.tau(pj // p) if pj > p else 1)
            assert lhs == rhs
            pj *= p


def test_deligne_clean(delta_small):
    assert ef.verify_deligne(delta_small.truncated(100_000)) == []


def test_deligne_flags_violation():
    a = np.array([0.0, 1.0, 3.0, 0.0])
    assert ef.verify_deligne(ef.EigenformCoefficients(12, a)) == [2]
    assert ef.verify_deligne(ef.EigenformCoefficients(12, np.array([0.0, 1.0]))) == []


# Petersson norm of Delta, integral of |Delta|^2 y^12 dx dy / y^2 over the fundamental domain
PETERSSON_DELTA = 1.035362056804320922e-6


def test_rankin_selberg_mean(delta_small):
    # the mean of a(n)^2 tends to K/2 ~ 0.384; the envelope applies to 2 * mean
    K = 6 * (4 * math.pi) ** 12 / (math.pi * math.factorial(11)) * PETERSSON_DELTA
    for x in (10**3, 10**4, 10**5):
        mean = math.fsum(delta_small.a[1 : x + 1] ** 2) / x
        assert 0.5 <= 2 * mean <= 2.5
        assert abs(2 * mean - K) / K < 0.05


def test_hecke_extend_reproduces_delta(delta_small):
    N = 20000
    primes = {p: delta_small.a[p] for p in primerange(2, N + 1)}
    ext = ef.hecke_extend(primes, N, 12)
    assert ext.a[1] == 1.0
    assert ext.a[4] == pytest.approx(-23 / 32, rel=1e-14)
    assert ext.a[12] == pytest.approx(ext.a[4] * ext.a[3], rel=1e-14)
    np.testing.assert_allclose(ext.a[1:], delta_small.a[1 : N + 1], rtol=1e-9, atol=1e-12)


def test_hecke_extend_errors():
    with pytest.raises(KeyError):
        ef.hecke_extend({2: 0.1}, 10, 12)
    with pytest.raises(ValueError):
        ef.hecke_extend({}, 10, 11)
    with pytest.warns(UserWarning):
        ef.hecke_extend({2: 3.0, 3: 0.0, 5: 0.0, 7: 0.0}, 10, 12)


def test_prime_file_and_cache(tmp_path, delta_small):
    f = tmp_path / "form.txt"
    f.write_text("# weight 12\n2 -0.5303300858899106\n3 0.48505624\n\n5 0.0\n")
    vals = ef.load_prime_values(f)
    assert vals == {2: -0.5303300858899106, 3: 0.48505624, 5: 0.0}
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1 3\n")
    with pytest.raises(ValueError):
        ef.load_prime_values(bad)

    small = ef.delta_coefficients(500, exact_limit=500)
    path = tmp_path / "tau.bin"
    ef.write_tau_cache(path, small)
    raw = path.read_bytes()
    assert raw[:4] == b"TAU1" and len(raw) == 16 + 16 * 500
    back = ef.read_tau_cache(path)
    assert back.exact == small.exact
    np.testing.assert_array_equal(back.a, small.a)


def test_load_delta_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("HECKE_TWISTS_CACHE", str(tmp_path))
    a = ef.load_delta(3000)
    assert (tmp_path / "delta_a_3000.npy").exists()
    b = ef.load_delta(2000)
    np.testing.assert_array_equal(a.a[:2001], b.a)
    assert b.tau(2) == -24


def test_n_primes_covers_growth():
    for N in (10, 10**5, 2 * 10**7):
        bound = 2 * N**6
        assert math.prod(ef._CRT_PRIMES[: ef._n_primes(N)]) > 2 * bound
