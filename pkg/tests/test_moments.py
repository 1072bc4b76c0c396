import math

import numpy as np
import pytest

from hecke_twists.arith import estimate_K, euler_product_P, psi
from hecke_twists.characters import build_group
from hecke_twists.lvalue import euler_local_factor, l_value_afe
from hecke_twists.moments import (
    BudgetError,
    diagonal_sum,
    double_sum_range,
    fit_secondary_constants,
    full_group_moment,
    main_term,
    moment_report,
    second_moment_direct,
    second_moment_double_sum,
)

ROUTE_QS = [5, 7, 8, 9, 12, 16, 21, 25, 32, 45, 60, 64, 77, 100, 105, 128, 143, 148]


@pytest.mark.parametrize("q", ROUTE_QS)
def test_route_equivalence(delta_mid, q):
    d = second_moment_direct(delta_mid, q, 1e-6)
    ds = second_moment_double_sum(delta_mid, q)
    assert d > 0
    assert abs(d - ds.total) <= 1e-6 * d
    assert ds.total >= -1e-6 * d


@pytest.mark.parametrize("q", [6, 10, 14, 30])
def test_no_primitive_characters(delta_mid, q):
    assert second_moment_direct(delta_mid, q) == 0
    assert abs(second_moment_double_sum(delta_mid, q).total) <= 1e-9


def test_forced_zero_moduli(delta_mid):
    assert second_moment_direct(delta_mid, 3) <= 1e-10
    assert second_moment_direct(delta_mid, 4) <= 1e-10


def test_direct_pairs_conjugates(delta_mid):
    # the sweep sums every primitive chi; pairing chi with its conjugate gives the same total
    q = 35
    g = build_group(q)
    seen, total = set(), []
    for chi in g.primitive_characters():
        if chi.index in seen:
            continue
        cj = chi.conjugate()
        seen.update({chi.index, cj.index})
        v = abs(l_value_afe(delta_mid, chi, tol=1e-8).value) ** 2
        total.append(v if cj.index == chi.index else 2 * v)
    assert second_moment_direct(delta_mid, q, 1e-8) == pytest.approx(math.fsum(total), rel=1e-10)


def test_partition_and_divisors(delta_mid):
    r = second_moment_double_sum(delta_mid, 100)
    assert r.small_divisor_part + r.large_divisor_part == r.total
    assert r.diagonal_part + r.off_diagonal_part == pytest.approx(r.small_divisor_part, rel=1e-12)
    assert set(r.terms) == {1, 2, 5, 10}
    r4 = second_moment_double_sum(delta_mid, 4)
    assert set(r4.terms) == {1, 2}
    r = second_moment_double_sum(delta_mid, 101)
    assert set(r.terms) == {1, 101}
    assert r.small_divisor_part == r.terms[1]


def test_main_term(delta_mid):
    K = estimate_K(delta_mid, 4 * 10**5, richardson=True)
    for q in (5, 12, 101, 1009, 2310):
        P = euler_product_P(q, 1, delta_mid).at_s.real
        assert main_term(delta_mid, q) / (q * math.log(q)) == pytest.approx(K * P * float(psi(q)), rel=1e-14)
    q = 1009
    a2 = delta_mid.a[q] ** 2
    closed = (1 - 1 / q) ** 2 * (1 - (a2 - 2) / q + 1 / q**2) / (1 - 1 / q**2) * (1 - 2 / q)
    P = euler_product_P(q, 1, delta_mid).at_s.real
    assert P * float(psi(q)) == pytest.approx(closed, rel=1e-14)
    # regression value recorded from the first verified run
    assert main_term(delta_mid, 1009) == pytest.approx(5349.3151798267445, rel=1e-12)
    with pytest.raises(ValueError):
        main_term(delta_mid, 2)


def test_diagonal_sum(delta_mid):
    ratios = [diagonal_sum(delta_mid, q).ratio for q in (211, 1009, 3001)]
    assert all(abs(b - 1) < abs(a - 1) or abs(b - 1) <= 0.15 for a, b in zip(ratios, ratios[1:]))
    a = diagonal_sum(delta_mid, 500, tol=1e-10).value
    b = diagonal_sum(delta_mid, 500, tol=5e-11).value
    assert abs(a - b) <= 1e-10
    d = diagonal_sum(delta_mid, 2310)
    assert d.value > 0 and d.predicted_leading > 0


def test_diagonal_matches_double_sum_split(delta_mid):
    q = 211
    r = second_moment_double_sum(delta_mid, q)
    d = diagonal_sum(delta_mid, q).value
    assert r.diagonal_part == pytest.approx((q - 1) * d, rel=1e-9)


def test_full_group_prime(delta_mid):
    q = 101
    L1 = l_value_afe(delta_mid, build_group(1).character(0)).value
    E = euler_local_factor(delta_mid, build_group(1).character(0), q)
    expect = second_moment_direct(delta_mid, q) + abs(L1 * E) ** 2
    assert full_group_moment(delta_mid, q) == pytest.approx(expect, rel=1e-12)


def test_full_group_composite_covers_all(delta_mid):
    # every character mod 12 is induced from exactly one primitive character
    q = 12
    total = full_group_moment(delta_mid, q)
    assert total >= second_moment_direct(delta_mid, q)


def test_report_determinism(delta_mid):
    reps = [moment_report(delta_mid, 100, threads=t) for t in (1, 3)]
    assert reps[0].canonical() == reps[1].canonical()
    r = reps[0]
    assert r.small_divisor_part + r.large_divisor_part == r.double_sum
    assert r.ratio == r.direct / r.main_term
    assert "direct" in r.runtime_breakdown and "runtime_breakdown" not in r.canonical()


def test_report_override(delta_mid):
    r = moment_report(delta_mid, 45, K_override=1.0, double_sum=False)
    assert math.isnan(r.double_sum)
    assert r.ratio_K_override == pytest.approx(r.ratio * r.K_used, rel=1e-12)


def test_budget(delta_mid):
    with pytest.raises(BudgetError):
        second_moment_double_sum(delta_mid, 3001)
    assert double_sum_range(3001) > 10**8


def test_fit_secondary_constants(delta_mid):
    K = 0.77
    qs = [101, 103, 105, 210, 211, 330, 1009]
    rows = []
    for q in qs:
        ep = euler_product_P(q, 1, delta_mid)
        P, dP = ep.at_s.real, ep.log_derivative_at_1 * ep.at_s.real
        rows.append(K * P * math.log(q) + 1.3 * P - 0.4 * dP)
    K1, K2 = fit_secondary_constants(qs, rows, delta_mid, K)
    assert K1 == pytest.approx(1.3, rel=1e-8) and K2 == pytest.approx(-0.4, rel=1e-6)
