import math

import numpy as np
import pytest

from flatcoupling import jets
from flatcoupling.errors import SingularJetError
from flatcoupling.jets import Jet


def rand_jet(rng, order=4, c0=None):
    c = rng.standard_normal(order + 1)
    if c0 is not None:
        c[0] = c0
    return Jet(c)


def test_multiply_by_constant():
    assert (Jet([1.0, 0, 0]) * Jet([2.0, 1, 0])) == Jet([2.0, 1, 0])


def test_square_of_time():
    assert (Jet([0.0, 1, 0]) ** 2) == Jet([0.0, 0, 1])


def test_product_matches_polynomial_multiplication(rng):
    for _ in range(20):
        a, b = rand_jet(rng), rand_jet(rng)
        expected = np.polynomial.polynomial.polymul(a.coeffs, b.coeffs)[:5]
        np.testing.assert_allclose((a * b).coeffs, expected, rtol=1e-14, atol=1e-14)


def test_quotient_times_divisor(rng):
    a, b = rand_jet(rng), rand_jet(rng, c0=1.5)
    np.testing.assert_allclose(((a / b) * b).coeffs, a.coeffs, atol=1e-13)


def test_division_by_zero_constant_term():
    with pytest.raises(SingularJetError):
        Jet([1.0, 1.0]) / Jet([0.0, 1.0])


def test_ring_axioms(rng):
    a, b, c = (rand_jet(rng) for _ in range(3))
    assert a + b == b + a
    np.testing.assert_allclose((a * b).coeffs, (b * a).coeffs, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, rtol=1e-13, atol=1e-13)


def test_exp_series():
    np.testing.assert_allclose(jets.exp(Jet([0.0, 1, 0, 0])).coeffs, [1, 1, 0.5, 1 / 6], rtol=1e-15)


def test_erf_at_zero():
    np.testing.assert_allclose(jets.erf(Jet([0.0, 1, 0])).coeffs, [0, 2 / math.sqrt(math.pi), 0], atol=1e-16)


MP_FUNCS = {
    "sqrt": "sqrt",
    "exp": "exp",
    "sin": "sin",
    "cos": "cos",
    "erf": "erf",
    "reciprocal": None,
}


def _mp_taylor(fn, order):
    """Taylor coefficients at 0 by high-precision numerical differentiation."""
    mpmath = pytest.importorskip("mpmath")
    with mpmath.workdps(40):
        return np.array([float(c) for c in mpmath.taylor(fn, 0, order)])


@pytest.mark.parametrize("name", sorted(MP_FUNCS))
def test_compose_matches_numerical_differentiation(rng, name):
    mpmath = pytest.importorskip("mpmath")
    f = getattr(jets, name)
    g = (lambda u: 1 / u) if MP_FUNCS[name] is None else getattr(mpmath, MP_FUNCS[name])
    for _ in range(5):
        a = Jet(np.r_[rng.uniform(0.8, 1.5), 0.3 * rng.standard_normal(5)])
        coeffs = [mpmath.mpf(float(c)) for c in a.coeffs]
        ref = _mp_taylor(lambda t: g(mpmath.polyval(coeffs[::-1], t)), 5)
        np.testing.assert_allclose(f(a).coeffs, ref, rtol=1e-6, atol=1e-10)


def test_atan2_matches_numerical_differentiation(rng):
    mpmath = pytest.importorskip("mpmath")
    y = Jet(np.r_[0.7, 0.3 * rng.standard_normal(5)])
    x = Jet(np.r_[-0.4, 0.3 * rng.standard_normal(5)])
    cy = [mpmath.mpf(float(c)) for c in y.coeffs][::-1]
    cx = [mpmath.mpf(float(c)) for c in x.coeffs][::-1]
    ref = _mp_taylor(lambda t: mpmath.atan2(mpmath.polyval(cy, t), mpmath.polyval(cx, t)), 5)
    np.testing.assert_allclose(jets.atan2(y, x).coeffs, ref, rtol=1e-6, atol=1e-10)


def test_sqrt_against_richardson_finite_differences(rng):
    """First two derivatives of sqrt(s(t)) by plain central differences."""
    a = Jet(np.r_[1.3, 0.3 * rng.standard_normal(5)])
    poly = np.polynomial.Polynomial(a.coeffs)

    def central(h):
        f = [math.sqrt(poly(k * h)) for k in (-1, 0, 1)]
        return np.array([(f[2] - f[0]) / (2 * h), (f[2] - 2 * f[1] + f[0]) / (h * h)])

    coarse, fine = central(1e-3), central(1e-4)
    ref = fine + (fine - coarse) / 99.0
    np.testing.assert_allclose(jets.sqrt(a).derivatives()[1:3], ref, rtol=1e-6)


def test_domain_errors_name_the_function():
    with pytest.raises(SingularJetError, match="sqrt"):
        jets.sqrt(Jet([-1.0, 1.0]))
    with pytest.raises(SingularJetError, match="atan2"):
        jets.atan2(Jet([0.0, 1.0]), Jet([0.0, 1.0]))


def test_shift_examples():
    assert Jet([5.0, 0, 0]).shift() == Jet([0.0, 0])
    assert Jet([0.0, 0, 1]).shift() == Jet([0.0, 2])
    with pytest.raises(ValueError):
        Jet([1.0]).shift()


def test_shift_leibniz(rng):
    a, b = rand_jet(rng), rand_jet(rng)
    lhs = (a * b).shift()
    rhs = a.shift() * b.truncate(3) + a.truncate(3) * b.shift()
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-13, atol=1e-13)


def test_chain_rule_identity():
    from flatcoupling.checks import chain_rule_error

    assert chain_rule_error(np.random.default_rng(7)) <= 1e-12


def test_scalar_erf_against_mpmath(oracles):
    xs = np.array(oracles["erf"]["x"])
    ref = np.array(oracles["erf"]["value"])
    got = np.array([jets.erf_scalar(x) for x in xs])
    assert np.max(np.abs(got - ref)) <= 1e-12


def test_erf_difference_keeps_relative_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for a, b in [(4.0, 3.5), (-3.2, -4.1), (6.0, 5.9), (1.2, 1.1), (0.3, -0.2)]:
        ref = float(mpmath.erf(a) - mpmath.erf(b))
        assert abs(jets.erf_diff(a, b) - ref) <= 1e-13 * abs(ref)
        jet = jets.erf_diff(Jet([a, 1.0]), Jet([b, 1.0]))
        assert abs(jet.value - ref) <= 1e-13 * abs(ref)


def test_mixed_orders_truncate_to_common_order():
    assert (Jet([1.0, 2.0, 3.0]) + Jet([1.0, 1.0])).order == 1
