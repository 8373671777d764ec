import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import contactflow as cf
from contactflow.charts import Chart, Covector, PolyField, ScalarField, TangentVector, pair


def test_chart_validation():
    with pytest.raises(cf.ContractViolation):
        Chart([], [])
    with pytest.raises(cf.ContractViolation):
        Chart(["x"], [(0.0, np.inf)])
    with pytest.raises(cf.ContractViolation):
        Chart(["x", "y"], [(0, 1), (1, 0)])
    ch = Chart(["t", "x"], [(-2, 2), (-3, 3)])
    assert ch.dim == 2
    assert ch.axis_index("x") == 1
    assert ch.contains([0.0, 0.0])
    assert not ch.contains([0.0, 5.0])


def test_boundary_clearance():
    ch = Chart(["x"], [(0.0, 10.0)])
    assert ch.boundary_clearance([3.0]) == pytest.approx(3.0)
    assert ch.boundary_clearance([9.0]) == pytest.approx(1.0)
    assert ch.boundary_clearance([-1.0]) < 0


finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


@given(a=finite, b=finite, lam=finite)
@settings(max_examples=50, deadline=None)
def test_pairing_bilinear(a, b, lam):
    ch = Chart(["x", "y"], [(-10, 10), (-10, 10)])
    p = Covector(ch, [a, b])
    v = TangentVector(ch, [b, 1.0])
    w = TangentVector(ch, [a, -2.0])
    lhs = pair(p, TangentVector(ch, lam * v.components + w.components))
    rhs = lam * pair(p, v) + pair(p, w)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_scalar_field_fd_gradient_matches_analytic():
    ch = Chart(["x", "y"], [(-4, 4), (-4, 4)])
    f = ScalarField(ch, lambda x: math.sin(x[0]) * x[1])
    g = ScalarField(ch, lambda x: math.sin(x[0]) * x[1],
                    grad=lambda x: np.array([math.cos(x[0]) * x[1], math.sin(x[0])]))
    pt = np.array([0.7, -1.2])
    assert f.grad_mode == "finite-difference"
    assert np.allclose(f.gradient(pt), g.gradient(pt), atol=1e-9)


def test_fd_gradient_at_boundary_raises():
    ch = Chart(["x"], [(0.0, 1.0)])
    f = ScalarField(ch, lambda x: x[0] ** 2)
    with pytest.raises(cf.BoundaryError):
        f.gradient([1.0 - 1e-12])


def test_polyfield_exact_derivatives():
    ch = Chart(["x", "y"], [(-9, 9), (-9, 9)])
    # f = 3 x^2 y - y + 2
    f = PolyField(ch, {(2, 1): 3.0, (0, 1): -1.0, (0, 0): 2.0})
    pt = np.array([1.5, -0.5])
    assert f.value(pt) == pytest.approx(3 * 1.5**2 * -0.5 + 0.5 + 2)
    assert np.allclose(f.gradient(pt), [6 * 1.5 * -0.5, 3 * 1.5**2 - 1])
    fxx = f.derivative((2, 0))
    assert fxx.value(pt) == pytest.approx(6 * -0.5)
    assert f.deriv_value((1, 1), pt) == pytest.approx(6 * 1.5)


@given(st.integers(min_value=0, max_value=3), finite)
@settings(max_examples=40, deadline=None)
def test_random_polynomial_gradient_consistency(deg, x0):
    ch = Chart(["x", "y"], [(-20, 20), (-20, 20)])
    rng = np.random.default_rng(deg + 17)
    f = cf.random_polynomial(ch, rng, max_degree=max(deg, 1), scale=0.5)
    pt = np.array([x0, -x0 / 2])
    sf = f.as_scalar_field()
    assert np.allclose(f.gradient(pt), sf.gradient(pt), atol=1e-12)
