import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from isoframe import jets as J

x_, y_ = sp.symbols("x y")


def _sym_derivs(expr, point, order):
    """All partials of a sympy expression up to ``order`` at ``point``."""
    out = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            d = sp.diff(expr, x_, a, y_, b) if (a or b) else expr
            out[(a, b)] = float(d.subs({x_: point[0], y_: point[1]}))
    return out


CASES = [
    (lambda X, Y: J.sin(X * Y) + X ** 3, sp.sin(x_ * y_) + x_ ** 3),
    (lambda X, Y: J.exp(X - 2 * Y) / (1 + X * X), sp.exp(x_ - 2 * y_) / (1 + x_ ** 2)),
    (lambda X, Y: J.log(X) * J.cosh(Y), sp.log(x_) * sp.cosh(y_)),
    (lambda X, Y: J.sqrt(X + Y * Y), sp.sqrt(x_ + y_ ** 2)),
    (lambda X, Y: J.power(X, 2.5) - J.tanh(Y) * J.tan(X / 3), x_ ** 2.5 - sp.tanh(y_) * sp.tan(x_ / 3)),
    (lambda X, Y: J.sinh(X) ** 3 * J.cos(Y), sp.sinh(x_) ** 3 * sp.cos(y_)),
]


@pytest.mark.parametrize("k", range(len(CASES)))
def test_partials_match_symbolic_oracle(k):
    fn, expr = CASES[k]
    point = (1.3, 0.4)
    X = J.Jet.variables(np.array(point), 4)
    jet = fn(X[0], X[1])
    for (a, b), exact in _sym_derivs(expr, point, 4).items():
        assert jet.derivative((a, b)) == pytest.approx(exact, rel=1e-11, abs=1e-11)


def test_batch_shape_and_values():
    pts = np.array([[0.1, 0.2, 0.3], [1.0, 2.0, 3.0]])
    X = J.Jet.variables(pts, 2)
    f = X[0] * X[1]
    assert f.shape == (3,)
    np.testing.assert_allclose(f.value, pts[0] * pts[1])
    np.testing.assert_allclose(f.derivative((1, 1)), 1.0)
    np.testing.assert_allclose(f.gradient(), [pts[1], pts[0]])


def test_truncation_and_min_order():
    X = J.Jet.variables(np.array([0.5]), 3)[0]
    low = J.Jet.variables(np.array([0.5]), 1)[0]
    prod = X * low
    assert prod.order == 1
    with pytest.raises(J.DerivativeUnavailable):
        prod.truncate(2)
    with pytest.raises(J.DerivativeUnavailable):
        X.truncate(0).partial(0)


def test_partial_lowers_order():
    X = J.Jet.variables(np.array([0.7, -0.2]), 3)
    f = X[0] ** 2 * X[1]
    fx = f.partial(0)
    assert fx.order == 2
    assert fx.value == pytest.approx(2 * 0.7 * -0.2)
    assert fx.derivative((0, 1)) == pytest.approx(2 * 0.7)


def test_domain_errors_propagate_as_nan():
    X = J.Jet.variables(np.array([-1.0]), 1)[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = J.log(X)
    assert np.isnan(out.value)


def test_antiderivative_univariate():
    t = J.Jet.variables(np.array([0.0]), 5)[0]
    f = J.cos(t)
    F = J.antiderivative(f)
    # integral of cos from 0: sin, with zero constant term
    np.testing.assert_allclose(F.coef[:6], [0, 1, 0, -1 / 6, 0, 1 / 120], atol=1e-15)


def test_compose_series_matches_direct():
    t = J.Jet.variables(np.array([0.3]), 4)[0]
    coeffs = np.array([math.sin(0.3), math.cos(0.3), -math.sin(0.3) / 2, -math.cos(0.3) / 6,
                       math.sin(0.3) / 24])
    direct = J.sin(t)
    composed = J.compose_series(coeffs, t - 0.3)
    np.testing.assert_allclose(composed.coef, direct.coef, atol=1e-15)


finite = st.floats(-2, 2, allow_nan=False)


@given(finite, finite, finite)
def test_product_rule(a, b, c):
    X = J.Jet.variables(np.array([a, b]), 3)
    f = J.sin(X[0]) + c * X[1]
    g = J.exp(X[1]) * X[0]
    lhs = (f * g).partial(0)
    rhs = f.partial(0) * g.truncate(2) + f.truncate(2) * g.partial(0)
    np.testing.assert_allclose(lhs.coef, rhs.coef, atol=1e-12)


@given(finite, finite)
def test_multiplication_is_associative_and_commutative(a, b):
    X = J.Jet.variables(np.array([a, b]), 4)
    f, g, h = J.cos(X[0]), X[1] + 2.0, J.sinh(X[0] - X[1])
    np.testing.assert_allclose(((f * g) * h).coef, (f * (g * h)).coef, atol=1e-12)
    np.testing.assert_allclose((f * g).coef, (g * f).coef, atol=0)


@given(st.floats(0.2, 3.0))
def test_reciprocal_inverts(a):
    X = J.Jet.variables(np.array([a]), 5)[0]
    one = (1.0 + X * X) * J.reciprocal(1.0 + X * X)
    np.testing.assert_allclose(one.coef, [1, 0, 0, 0, 0, 0], atol=1e-12)


def test_stack_and_getitem():
    X = J.Jet.variables(np.array([1.0, 2.0]), 2)
    s = J.stack([X[0], X[1], X[0] * X[1]])
    assert s.shape == (3,)
    assert s[2].derivative((1, 1)) == pytest.approx(1.0)
