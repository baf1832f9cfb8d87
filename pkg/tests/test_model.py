import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triplesol.errors import ConfigError, DomainError
from triplesol.geometry import Ball, Box2D
from triplesol.model import (
    CONSISTENT,
    FAIL,
    INCONCLUSIVE,
    PASS,
    VIOLATED,
    GeneralA,
    MatrixForm,
    PLaplacian,
    Weight,
    check_alpha,
    check_growth,
    check_h0,
    check_h1,
    check_potential_bound,
    expression_nonlinearity,
    log_quartic,
    nonlinearity_from_dict,
    operator_from_dict,
    piecewise_h,
    primitive,
    weight_from_dict,
)


def _fd_flux(op, x, xi, h=1e-6):
    out = np.zeros_like(xi)
    for j in range(xi.shape[1]):
        e = np.zeros(xi.shape[1])
        e[j] = h
        out[:, j] = (op.density(x, xi + e) - op.density(x, xi - e)) / (2 * h)
    return out


@pytest.mark.parametrize(
    "op",
    [PLaplacian(2), PLaplacian(3), PLaplacian(4), MatrixForm([[2.0, 0.5], [0.5, 1.0]], 0.3, 1.5)],
    ids=["p2", "p3", "p4", "matrix"],
)
def test_flux_is_density_gradient(op):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 2))
    xi = rng.normal(size=(50, 2))
    assert np.allclose(op.flux(x, xi), _fd_flux(op, x, xi), rtol=1e-6, atol=1e-8)


def test_p_laplacian_constants():
    op = PLaplacian(4)
    assert op.lambda1 == op.lambda2 == 0.25
    assert op.isotropic
    xi = np.array([[3.0, 4.0]])
    assert op.density(None, xi)[0] == pytest.approx(625 / 4)
    with pytest.raises(DomainError):
        PLaplacian(1.0)


def test_p_laplacian_small_p_regularized_at_zero():
    op = PLaplacian(1.5)
    z = np.zeros((1, 2))
    assert np.all(np.isfinite(op.flux(None, z, eps=1e-8)))
    assert np.all(op.flux(None, z, eps=0.0) == 0)


def test_matrix_form_validation_and_isotropy():
    assert MatrixForm(np.eye(2), 0.5, 0.5).isotropic
    assert not MatrixForm([[2.0, 0.0], [0.0, 1.0]], 0.5, 1.0).isotropic
    with pytest.raises(DomainError):
        MatrixForm([[1.0, 2.0], [0.0, 1.0]], 0.5, 1.0)
    with pytest.raises(DomainError):
        MatrixForm(np.eye(2), 1.0, 0.5)


@pytest.mark.parametrize("N", [2, 3, 5])
@pytest.mark.parametrize("op", [PLaplacian(2), PLaplacian(3), PLaplacian(4)], ids=["p2", "p3", "p4"])
def test_check_alpha_accepts_p_laplacian(op, N):
    rep = check_alpha(op, N, samples=400)
    assert rep.passed, rep.to_dict()


def test_check_alpha_accepts_matrix_with_true_bounds():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    ev = np.linalg.eigvalsh(a)
    rep = check_alpha(MatrixForm(a, ev[0] / 2, ev[1] / 2), 2, samples=400)
    assert rep.passed, rep.to_dict()


def test_check_alpha_flags_overstated_ellipticity():
    a = np.array([[2.0, 0.0], [0.0, 1.0]])
    rep = check_alpha(MatrixForm(a, 0.9, 1.0), 2, samples=400)
    assert not rep.conditions["alpha5"].passed
    assert rep.conditions["alpha5"].witness is not None


def test_check_alpha_flags_bad_general_density():
    # A = |xi|^2 / 2 + |xi|^3 breaks the upper p-growth bound for p = 2
    op = GeneralA.from_profile(lambda s: s**2 / 2 + s**3, lambda s: s + 3 * s**2, 2.0, 0.5, 0.5, 1.0)
    rep = check_alpha(op, 2, samples=400)
    assert not rep.passed


def test_operator_round_trip():
    for d in (
        {"type": "p-laplacian", "p": 3.0},
        {"type": "matrix", "matrix": [[1.0, 0.0], [0.0, 1.0]], "lambda1": 0.5, "lambda2": 0.5},
    ):
        assert operator_from_dict(d).to_dict() == d
    g = operator_from_dict({"type": "general", "density": "s^2/2", "flux": "s", "p": 2,
                            "lambda1": 0.5, "lambda2": 0.5, "growth_c": 1})
    assert g.density(None, np.array([[3.0, 4.0]]))[0] == pytest.approx(12.5)
    with pytest.raises(ConfigError) as e:
        operator_from_dict({"type": "p-laplacian"})
    assert e.value.path == "operator.p"


def test_log_quartic_primitive():
    g = log_quartic()
    assert float(g.F(1.5)) == pytest.approx(primitive(g, 1.5), rel=1e-12)
    assert float(g.F(1.5)) == pytest.approx(0.7805, abs=5e-4)
    assert float(g.F(0.0)) == pytest.approx(0.0, abs=1e-15)
    assert float(g.F(-2.0)) == pytest.approx(-float(g.F(2.0)), rel=1e-12)


def test_piecewise_h_continuity_and_primitive():
    r = 5.0
    h = piecewise_h(3, r)
    eps = 1e-9
    assert float(h(r - eps)) == pytest.approx(float(h(r + eps)), rel=1e-7)
    assert float(h(0.0)) == 1.0
    for s in (-12.0, -5.0, -1.0, 0.5, 5.0, 7.5, 40.0):
        assert float(h.F(s)) == pytest.approx(primitive(h, s, 1e-12), rel=1e-11)
    with pytest.raises(DomainError):
        piecewise_h(2.0, 1.0)


def test_tabulated_primitive_matches_quadrature():
    nl = expression_nonlinearity("t*exp(-t^2) + sin(t)", 1, 1, 2)
    s = np.array([-30.0, -3.1, 0.0, 0.01, 1.0, 2.7, 15.2, 80.0])
    exact = -np.exp(-s**2) / 2 + 0.5 + 1 - np.cos(s)
    assert np.allclose(nl.F(s), exact, rtol=1e-11, atol=1e-13)


def test_nonlinearity_from_dict():
    assert nonlinearity_from_dict({"builtin": "log-quartic"}).q == 6
    assert nonlinearity_from_dict({"builtin": "piecewise-h", "q": 3, "r": 2}).breakpoints == (-2.0, 2.0)
    with pytest.raises(ConfigError) as e:
        nonlinearity_from_dict({"builtin": "piecewise-h", "q": 3})
    assert e.value.path == "nonlinearity.r"
    with pytest.raises(ConfigError) as e:
        nonlinearity_from_dict({"expr": "t +* 2", "a1": 1, "a2": 1, "q": 2})
    assert e.value.path == "nonlinearity.expr"
    with pytest.raises(ConfigError):
        nonlinearity_from_dict({"expr": "t", "a1": 1, "a2": 1})


def test_growth_checker():
    assert check_growth(log_quartic()).status == PASS
    # log(1 + t^4) is not bounded by 1 + |t|^0.5 for large t
    tight = log_quartic(a1=0.0, a2=1.0, q=1.5)
    v = check_growth(tight)
    assert v.status == FAIL and v.witness is not None


def test_h0_checker():
    assert check_h0(log_quartic(), 2.0).status == PASS
    neg = expression_nonlinearity("-1 + 0*t", 1, 1, 2)
    v = check_h0(neg, 1.0)
    assert v.status == FAIL and 0 < v.witness < 1
    late = expression_nonlinearity("1 - t", 1, 1, 2)
    assert check_h0(late, 1.5).status == PASS
    assert check_h0(late, 1.5, strict=True).status == FAIL


def test_h1_checker():
    assert check_h1(log_quartic(), 4).status == CONSISTENT
    assert check_h1(piecewise_h(3, 10.0), 2).status == CONSISTENT
    assert check_h1(expression_nonlinearity("t^5", 1, 1, 6), 4).status == VIOLATED
    wobble = expression_nonlinearity("t^3 * (1 + 0.5*sin(log(1 + abs(t))))", 1, 2, 4.5)
    assert check_h1(wobble, 4).status in (INCONCLUSIVE, VIOLATED)


def test_potential_bound_checker():
    assert check_potential_bound(log_quartic(), 4).passed
    assert not check_potential_bound(log_quartic(a2=0.1), 4).passed


def test_constant_and_scaled_weight():
    w = Weight.constant(2.0)
    assert w.k_min == w.k_sup == 2.0 and w.radial
    pts = np.zeros((3, 2))
    assert w(pts).tolist() == [2.0, 2.0, 2.0]
    s = w.scaled(5.0)
    assert s.k_min == 10.0 and s(pts).tolist() == [10.0] * 3
    with pytest.raises(DomainError):
        Weight.constant(0.0)


def test_affine_weight_exact_bounds():
    w = Weight.affine(3.0, [1.0, 0.0], Box2D(2.0, 1.0))
    assert (w.k_min, w.k_sup) == (2.0, 4.0)
    b = Weight.affine(3.0, [0.6, 0.8], Ball(2, 1.0))
    assert b.k_min == pytest.approx(2.0) and b.k_sup == pytest.approx(4.0)
    with pytest.raises(DomainError):
        Weight.affine(0.5, [1.0, 0.0], Ball(2, 1.0))


def test_expression_weight_is_radial_when_only_r():
    dom = Ball(2, 1.0)
    w = weight_from_dict({"type": "expression", "expr": "2 + r^2"}, dom)
    assert w.radial
    assert w.k_min <= 2.0 and w.k_sup >= 3.0
    w2 = weight_from_dict({"type": "expression", "expr": "2 + x0"}, dom)
    assert not w2.radial
    assert w2.k_min <= 1.0 + 1e-12 and w2.k_sup >= 3.0 - 1e-12


@given(st.floats(0.1, 10), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=40)
def test_affine_bounds_contain_samples(c0, g0, g1):
    dom = Box2D(1.0, 1.0)
    spread = 0.5 * (abs(g0) + abs(g1))
    if c0 - spread <= 0:
        return
    w = Weight.affine(c0, [g0, g1], dom)
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, size=(200, 2))
    vals = w(pts)
    assert np.all(vals >= w.k_min - 1e-12) and np.all(vals <= w.k_sup + 1e-12)


@given(st.floats(-50, 50))
def test_primitive_derivative_is_f(s):
    nl = piecewise_h(3, 4.0)
    h = 1e-5 * max(1.0, abs(s))
    if abs(abs(s) - 4.0) < 2 * h:
        return
    d = (float(nl.F(s + h)) - float(nl.F(s - h))) / (2 * h)
    assert d == pytest.approx(float(nl(s)), rel=1e-6, abs=1e-8)


def test_h_from_examples_has_nonzero_value_at_zero():
    assert float(piecewise_h(3, 2.0)(0.0)) == 1.0
    assert math.isclose(float(log_quartic()(0.0)), 0.0)
