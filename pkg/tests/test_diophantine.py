import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgeo.diophantine import (
    Approximand,
    PrecisionLossError,
    RationalInputError,
    Verdict,
    approx_exponent,
    as_approximand,
    cf_expand,
    liouville_partial_sum,
    matrix_badly_approximable,
)

PHI = (1 + math.sqrt(5)) / 2


def hp(expr_fn, dps=80):
    with mpmath.workdps(dps):
        return as_approximand(expr_fn())


def fib(k):
    a, b = 1, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def check_convergent_invariants(cf):
    a = cf.partial_quotients
    conv = cf.convergents
    p2, p1, q2, q1 = 0, 1, 1, 0
    for k, (p, q) in enumerate(conv):
        assert p == a[k] * p1 + p2 and q == a[k] * q1 + q2
        assert math.gcd(p, q) == 1 and q > 0
        p2, p1, q2, q1 = p1, p, q1, q
    assert all(x >= 1 for x in a[1:])
    errs = cf.errors()
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


def test_golden_ratio_expansion():
    cf = cf_expand(PHI, 30)
    assert set(cf.partial_quotients) == {1}
    for k, (p, q) in enumerate(cf.convergents):
        assert (p, q) == (fib(k + 1), fib(k))
    check_convergent_invariants(cf)


def test_rational_terminates():
    cf = cf_expand(Fraction(22, 7), 10)
    assert cf.partial_quotients == (3, 7)
    assert cf.terminated
    assert cf.convergents[-1] == (22, 7)


def test_sqrt2_expansion_and_identity():
    cf = cf_expand(math.sqrt(2), 20)
    assert cf.partial_quotients[0] == 1 and set(cf.partial_quotients[1:]) == {2}
    s2 = Fraction(math.sqrt(2))
    for p, q in cf.convergents[1:8]:
        # |q sqrt2 - p| = |2q^2 - p^2| / (q sqrt2 + p) = 1 / (q sqrt2 + p)
        assert abs(p * p - 2 * q * q) == 1
        assert float(abs(q * s2 - p)) == pytest.approx(1 / (q * math.sqrt(2) + p), rel=1e-6)


@pytest.mark.parametrize(
    "value, period",
    [(lambda: mpmath.sqrt(2), [2]), (lambda: mpmath.sqrt(3), [1, 2]), (lambda: (1 + mpmath.sqrt(5)) / 2, [1])],
)
def test_quadratic_periodicity_to_depth_30(value, period):
    cf = cf_expand(hp(value), 30)
    tail = list(cf.partial_quotients[1:])
    assert len(tail) == 29
    assert tail == [period[i % len(period)] for i in range(len(tail))]
    check_convergent_invariants(cf)


@pytest.mark.parametrize("value", [lambda: mpmath.sqrt(2), lambda: mpmath.e, lambda: mpmath.pi, lambda: mpmath.sqrt(7)])
def test_best_approximation_property(value):
    ax = hp(value)
    x = ax.value
    cf = cf_expand(ax, 40)
    check_convergent_invariants(cf)
    for p, q in cf.convergents:
        if q > 2000:
            break
        best = abs(q * x - p)
        for qq in range(1, q):
            pp = round(qq * x)
            assert abs(qq * x - pp) > best


def test_precision_loss_reported():
    with pytest.raises(PrecisionLossError):
        cf_expand(math.sqrt(2), 60, strict=True)
    cf = cf_expand(math.sqrt(2), 60)
    assert cf.terminated and cf.convergents[-1][1] < 2**53


def test_depth_limit():
    with pytest.raises(ValueError):
        cf_expand(PHI, 61)


def test_exponent_examples():
    assert 0.95 <= approx_exponent(PHI) <= 1.05
    assert 0.95 <= approx_exponent(math.sqrt(2)) <= 1.05
    assert approx_exponent(liouville_partial_sum(6)) > 5


def test_exponent_rational_error():
    with pytest.raises(RationalInputError):
        approx_exponent(Fraction(22, 7))
    with pytest.raises(RationalInputError):
        approx_exponent(0.5)


def test_liouville_partial_sum_precision():
    ax = liouville_partial_sum(3)
    assert ax.value == Fraction(1, 10) + Fraction(1, 100) + Fraction(1, 10**6)
    assert ax.eps == Fraction(2, 10**24)


@settings(max_examples=25, deadline=None)
@given(st.integers(-50, 50), st.sampled_from([2, 3, 5, 6, 7, 10, 11, 13]))
def test_exponent_shift_and_sign_invariance(m, n):
    with mpmath.workdps(60):
        r = mpmath.sqrt(n)
        base = approx_exponent(as_approximand(r))
        shifted = approx_exponent(as_approximand(r + m))
        negated = approx_exponent(as_approximand(-r))
    assert shifted == pytest.approx(base, abs=1e-9)
    assert negated == pytest.approx(base, abs=1e-9)


def test_as_approximand_kinds():
    assert as_approximand(Fraction(1, 3)).eps == 0
    assert as_approximand(0.1).eps == Fraction(math.ulp(0.1))
    with pytest.raises(ValueError):
        as_approximand(float("nan"))
    assert isinstance(as_approximand(Approximand(Fraction(1), Fraction(0))), Approximand)


def rot(c):
    return c * np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_golden_matrix_yes():
    v = matrix_badly_approximable(rot(2 * math.pi * PHI))
    assert v.verdict is Verdict.YES
    assert v.witness == (1, 0)
    assert v.exponents[0] is None and 0.95 <= v.exponents[1] <= 1.05


def test_integral_matrix_rational():
    v = matrix_badly_approximable(rot(2 * math.pi * 3))
    assert v.verdict is Verdict.RATIONAL and v.integral
    v = matrix_badly_approximable(theta_over_2pi=[[0, Fraction(1, 2)], [Fraction(-1, 2), 0]])
    assert v.verdict is Verdict.RATIONAL and not v.integral


def test_liouville_matrix_no_evidence():
    L = liouville_partial_sum(6)
    m = [[Approximand(Fraction(0), Fraction(0)), L], [Approximand(-L.value, L.eps), Approximand(Fraction(0), Fraction(0))]]
    v = matrix_badly_approximable(theta_over_2pi=m, depth=10)
    assert v.verdict is Verdict.NO_EVIDENCE and v.witness is None


def test_four_dim_golden_blocks():
    th = np.zeros((4, 4))
    th[:2, :2] = rot(2 * math.pi * PHI)
    th[2:, 2:] = rot(2 * math.pi / PHI)
    v = matrix_badly_approximable(th, depth=2)
    assert v.verdict is Verdict.YES


def test_matrix_input_checks():
    with pytest.raises(ValueError):
        matrix_badly_approximable(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        matrix_badly_approximable(np.zeros((3, 3)))
