import math
from fractions import Fraction

import numpy as np
import pytest

from pavg.enums.fixtures import DEPRESSED_QUINTIC, RESOLVENT_SEXTIC_P20, SIX_AVERAGE_DATA
from pavg.services.algebra import (
    ComplexPolynomial,
    IntPolynomial,
    RationalPolynomial,
    cardano_real_root,
    cos_arith_progression_sum,
    cos_power_sum,
    depress,
    direct_cos_power_sum,
    four_average_cubic,
    integer_root_test,
    p_average_equation,
    polygon_mean,
    quintic_check,
    six_average_equation,
    verify_trig,
    verify_walsh,
)
from pavg.services.paverage import WeightedSample, p_average


def _from_roots(roots, extra=None):
    poly = RationalPolynomial.build([1])
    for r in roots:
        poly = poly * RationalPolynomial.build([-r, 1])
    if extra is not None:
        poly = poly * extra
    return poly


def _brute_force_integer_roots(poly):
    c0 = int(poly.coefficient(0))
    if c0 == 0:
        return None
    divisors = set()
    for d in range(1, math.isqrt(abs(c0)) + 1):
        if c0 % d == 0:
            divisors.update({d, abs(c0) // d})
    return sorted(s * d for d in divisors for s in (1, -1) if poly(s * d) == 0)


# --- exact polynomials ------------------------------------------------------


def test_build_returns_int_polynomial_for_integer_coefficients():
    assert isinstance(RationalPolynomial.build([1, 2, 3]), IntPolynomial)
    assert not isinstance(RationalPolynomial.build([Fraction(1, 2), 1]), IntPolynomial)
    with pytest.raises(ValueError):
        IntPolynomial([Fraction(1, 3)])


def test_polynomial_arithmetic_is_exact():
    p = RationalPolynomial.build([1, 1])
    assert (p**3).coefficients == (1, 3, 3, 1)
    assert (p * p - p).coefficients == (0, 1, 1)
    assert (p**2).derivative() == RationalPolynomial.build([2, 2])
    assert p.shift(Fraction(1, 2))(0) == Fraction(3, 2)
    assert RationalPolynomial.build([3, 0, 2]).monic().coefficients == (Fraction(3, 2), 0, 1)
    assert RationalPolynomial.build([0, -1, 0, 1]).format("t") == "t^3 - t"
    with pytest.raises(ValueError):
        RationalPolynomial.build([]).monic()


# --- Walsh polygon mean -----------------------------------------------------


def test_polygon_mean_reproduces_polynomial_values():
    rng = np.random.default_rng(7)
    for _ in range(200):
        degree = int(rng.integers(0, 9))
        poly = ComplexPolynomial(tuple(rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)))
        z = complex(rng.normal(), rng.normal())
        r = float(rng.uniform(0.1, 2.0))
        theta = float(rng.uniform(0, 2 * np.pi))
        n = max(1, degree) + int(rng.integers(0, 4))
        mean = polygon_mean(poly, z, r, theta, n)
        assert abs(mean - poly(z)) <= 1e-10 * max(1.0, poly.scale_at(z, r))


def test_polygon_mean_fails_below_the_degree():
    square = ComplexPolynomial((0, 0, 1))
    z = 0.3 - 0.7j
    assert abs(polygon_mean(square, z, 1.0, 0.4, 1) - square(z)) == pytest.approx(1.0)


def test_polygon_mean_rejects_bad_arguments():
    with pytest.raises(ValueError):
        polygon_mean(ComplexPolynomial((1,)), 0, 1.0, 0.0, 0)
    with pytest.raises(ValueError):
        polygon_mean(ComplexPolynomial((1,)), 0, 0.0, 0.0, 2)


def test_verify_walsh_report():
    report = verify_walsh(8, 200, seed=0)
    assert report["pass"] is True
    assert report["max_relative_error"] <= 1e-10
    assert report["negative_control_error"] > 1e-3


# --- cosine power sums ------------------------------------------------------


def test_cos_power_sum_matches_closed_form():
    rng = np.random.default_rng(8)
    for k in range(1, 13):
        for r in range(1, k + 1):
            for a in rng.uniform(0, 2 * np.pi, size=20):
                result = cos_power_sum(k, r, float(a))
                assert result.closed_form == Fraction((2 * k + 2) * math.comb(2 * r, r), 4**r)
                assert abs(result.numeric - float(result.closed_form)) <= 1e-12 * (2 * k + 2)


def test_hexagon_fourth_power_sum():
    result = cos_power_sum(2, 2, 0.0)
    assert result.closed_form == Fraction(18, 8)
    assert result.numeric == pytest.approx(2.25, abs=1e-14)


def test_cos_power_sum_identity_breaks_past_k():
    assert direct_cos_power_sum(1, 2, 0.0) == pytest.approx(2.0, abs=1e-14)
    assert 4 * Fraction(math.comb(4, 2), 16) == Fraction(3, 2)
    with pytest.raises(ValueError):
        cos_power_sum(1, 2, 0.0)


def test_cos_arith_progression_sum():
    rng = np.random.default_rng(9)
    for _ in range(100):
        alpha = float(rng.uniform(-3, 3))
        d = float(rng.uniform(0.01, 3))
        n = int(rng.integers(1, 20))
        direct = sum(math.cos(alpha + j * d) for j in range(n))
        assert cos_arith_progression_sum(alpha, d, n) == pytest.approx(direct, abs=1e-10)
    assert cos_arith_progression_sum(0.3, 0.0, 5) == pytest.approx(5 * math.cos(0.3))


def test_verify_trig_report():
    report = verify_trig(12)
    assert report["pass"] is True
    assert report["hexagon_cos4_sum"] == "9/4"
    assert report["cases"] == 78 * 20


# --- depression and Cardano -------------------------------------------------


def test_depress_four_average_cubic():
    cubic = four_average_cubic([0, 0, 3])
    depression = depress(cubic)
    assert depression.shift == 1
    assert depression.depressed.coefficients == (-2, 6, 0, 1)
    root = cardano_real_root(6.0, -2.0) + float(depression.shift)
    assert root == pytest.approx(3.0 / (1.0 + 2.0 ** (1.0 / 3.0)), abs=1e-12)


def test_depress_preserves_roots():
    rng = np.random.default_rng(10)
    for degree in (3, 5):
        for _ in range(50):
            # distinct real roots plus one complex pair keeps every root simple
            reals = [Fraction(int(r), 2) for r in rng.choice(np.arange(-9, 10), size=degree - 2, replace=False)]
            b = int(rng.integers(-4, 5))
            pair = RationalPolynomial.build([b * b + int(rng.integers(1, 6)), 2 * b, 1])
            poly = _from_roots(reals, pair) * int(rng.integers(1, 5))
            depression = depress(poly)
            assert depression.depressed.coefficient(degree - 1) == 0
            original = np.roots(poly.to_float_array()[::-1])
            moved = np.roots(depression.depressed.to_float_array()[::-1]) + float(depression.shift)
            distances = np.abs(moved[:, None] - original[None, :])
            assert distances.min(axis=1).max() <= 1e-9
            assert distances.min(axis=0).max() <= 1e-9


def test_depress_rejects_other_degrees():
    with pytest.raises(ValueError):
        depress(RationalPolynomial.build([1, 0, 0, 0, 1]))


def test_cardano_real_root():
    assert cardano_real_root(1.0, -2.0) == pytest.approx(1.0, abs=1e-14)
    assert cardano_real_root(0.0, 8.0) == pytest.approx(-2.0, abs=1e-14)
    with pytest.raises(ValueError):
        cardano_real_root(-3.0, 0.0)


def test_four_average_cubic_root_is_the_four_average():
    rng = np.random.default_rng(12)
    for _ in range(50):
        values = [int(v) for v in rng.integers(-20, 20, size=int(rng.integers(2, 8)))]
        if len(set(values)) == 1:
            continue
        weights = [int(w) for w in rng.integers(1, 5, size=len(values))]
        depression = depress(four_average_cubic(values, weights))
        p = float(depression.depressed.coefficient(1))
        q = float(depression.depressed.coefficient(0))
        root = cardano_real_root(p, q) + float(depression.shift)
        assert root == pytest.approx(p_average(WeightedSample.of(values, weights), 4).value, abs=1e-9)


# --- the six-average quintic ------------------------------------------------


def test_six_average_equation_depresses_to_the_fixture():
    depression = depress(six_average_equation(SIX_AVERAGE_DATA))
    assert depression.shift == 10
    assert depression.depressed == IntPolynomial(DEPRESSED_QUINTIC)
    assert depression.depressed.coefficients == (156, 13460, 72, 376, 0, 1)


def test_six_average_equation_is_a_sixth_of_the_derivative():
    values = [1, 6, 11, 13, 19]
    sixth = RationalPolynomial.build([])
    for v in values:
        sixth = sixth + RationalPolynomial.build([-v, 1]) ** 6
    assert six_average_equation(values) == sixth.derivative() * Fraction(1, 6)


def test_p_average_equation_rejects_odd_p():
    with pytest.raises(ValueError):
        p_average_equation([1, 2], 5)
    with pytest.raises(ValueError):
        six_average_equation([1.5, 2])


# --- integer roots ----------------------------------------------------------


def test_integer_root_test_examples():
    assert integer_root_test(_from_roots([3, -4], RationalPolynomial.build([1, 0, 1]))) == [-4, 3]
    assert integer_root_test(RationalPolynomial.build([-2, 0, 1])) == []
    assert integer_root_test(RationalPolynomial.build([0, 0, -1, 1])) == [0, 1]
    with pytest.raises(ValueError):
        integer_root_test(RationalPolynomial.build([]))
    with pytest.raises(ValueError):
        integer_root_test(RationalPolynomial.build([Fraction(1, 2), 1]))


def test_printed_resolvent_sextic_has_no_integer_root():
    assert integer_root_test(IntPolynomial(RESOLVENT_SEXTIC_P20)) == []


def test_integer_root_test_agrees_with_divisor_search():
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 150:
        roots = [int(r) for r in rng.integers(-30, 31, size=int(rng.integers(1, 4)))]
        extra = RationalPolynomial.build([int(rng.integers(1, 40)), int(rng.integers(-5, 6)), 1])
        poly = _from_roots(roots, extra if rng.random() < 0.7 else None)
        expected = _brute_force_integer_roots(poly)
        if expected is None or abs(int(poly.coefficient(0))) > 10**6:
            continue
        assert integer_root_test(poly) == expected
        checked += 1


def test_quintic_check_report():
    report = quintic_check()
    assert report["pass"] is True
    assert report["shift"] == "10"
    assert report["depressed"] == "t^5 + 376t^3 + 72t^2 + 13460t + 156"
    assert report["depressed_matches_fixture"] is True
    assert report["resolvent_integer_roots"] == []
    assert "verbatim" in report["resolvent_note"]
