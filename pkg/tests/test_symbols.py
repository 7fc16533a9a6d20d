import math

import numpy as np
import pytest

from bswkb.symbols import (SymbolError, SymbolModel, make_model,
                           parse_symbol_config)


def test_harmonic_builtin_terms():
    m = make_model("harmonic")
    assert set(m.terms_p0) == {(1.0, 0, 2), (1.0, 2, 0)}


def test_parse_quartic_and_p1():
    m = parse_symbol_config("family: polynomial\np0: [[1,0,2],[1,4,0]]\np1: [[1,1,0]]\n")
    assert m.eval(0, 1.3, 0.7) == pytest.approx(0.7 ** 2 + 1.3 ** 4)
    assert m.eval(1, 0.5, 3.0) == 0.5


def test_parse_rejects_unknown_keys_and_bad_powers():
    with pytest.raises(SymbolError):
        parse_symbol_config("family: harmonic\nbogus: 1\n")
    with pytest.raises(SymbolError):
        parse_symbol_config("family: polynomial\np0: [[1,-1,0]]\n")
    with pytest.raises(SymbolError):
        parse_symbol_config("family: nosuch\n")
    with pytest.raises(SymbolError):
        parse_symbol_config("][")


def test_eval_examples():
    m = make_model("harmonic")
    assert m.eval(0, 1.0, 0.0) == 1.0
    assert m.eval(0, 0.0, 0.0) == 0.0


def test_partial_examples():
    h = make_model("harmonic")
    q = make_model("quartic-well")
    assert h.eval_partial(0, 2, 0, 0.37, -1.2) == 2.0
    assert q.eval_partial(0, 4, 0, 0.37, -1.2) == 24.0
    assert h.eval_partial(0, 1, 1, 0.37, -1.2) == 0.0


def test_partial_order_gate():
    m = make_model("harmonic")
    with pytest.raises(SymbolError):
        m.eval_partial(0, 5, 0, 0.0, 0.0)


def test_linearity_of_monomial_sums():
    terms = [(0.7, 2, 1), (-1.3, 0, 3), (2.0, 1, 0)]
    whole = make_model("polynomial", p0=terms)
    parts = [make_model("polynomial", p0=[t]) for t in terms]
    for x, xi in [(0.3, -1.1), (2.0, 0.5), (-1.7, 1.9)]:
        assert whole.eval(0, x, xi) == pytest.approx(
            sum(p.eval(0, x, xi) for p in parts), abs=1e-15)


def _fd_clone(m):
    return SymbolModel(family=m.family, terms_p0=m.terms_p0, terms_p1=m.terms_p1,
                       terms_p2=m.terms_p2, potential=m.potential,
                       derivative_mode="finite-difference")


@pytest.mark.parametrize("family,tol", [
    ("harmonic", 1e-6),
    ("quartic-well", 1e-6),
])
def test_fd_matches_analytic_polynomial(family, tol):
    """Polynomial families: FD mode within 1e-6 relative at 100 random points."""
    m = make_model(family, p1=[[0.5, 1, 1]])
    fd = _fd_clone(m)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-2.0, 2.0, size=(100, 2))
    for dx, dxi in [(1, 0), (0, 1), (2, 0), (1, 1), (2, 2), (3, 0), (4, 0)]:
        for x, xi in pts:
            a = m.eval_partial(0, dx, dxi, x, xi)
            b = fd.eval_partial(0, dx, dxi, x, xi)
            scale = max(1.0, abs(a), abs(m.eval(0, x, xi)))
            assert abs(b - a) <= tol * scale


@pytest.mark.parametrize("family,params", [
    ("morse", {"A": 4.0, "a": 1.0}),
    ("poschl-teller", {"A": 3.0, "a": 1.0}),
])
def test_fd_sane_for_exponential_potentials(family, params):
    """Steep non-polynomial potentials: looser bound (2nd-order stencils hit
    the double-precision limit on 4th derivatives)."""
    m = make_model(family, params=params)
    fd = _fd_clone(m)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-2.0, 2.0, size=(40, 2))
    for dx, dxi in [(1, 0), (2, 0), (3, 0), (4, 0)]:
        for x, xi in pts:
            a = m.eval_partial(0, dx, dxi, x, xi)
            b = fd.eval_partial(0, dx, dxi, x, xi)
            scale = max(1.0, abs(a), abs(m.eval(0, x, xi)))
            assert abs(b - a) <= 1e-4 * scale


def test_morse_derivatives_closed_form():
    m = make_model("morse", params={"A": 4.0, "a": 1.5})
    x = 0.37
    V = lambda y: 4.0 * (math.exp(-3.0 * y) - 2.0 * math.exp(-1.5 * y))
    assert m.eval(0, x, 0.0) == pytest.approx(V(x), rel=1e-14)
    eps = 1e-6
    dV = (V(x + eps) - V(x - eps)) / (2 * eps)
    assert m.eval_partial(0, 1, 0, x, 0.0) == pytest.approx(dV, rel=1e-8)


def test_swapped_view_partials():
    m = make_model("polynomial", p0=[[1.0, 0, 2], [1.0, 4, 0]], p1=[[2.0, 1, 1]])
    sw = m.swapped()
    x, xi = 0.6, -1.1
    # value: s_swap(x, xi) = s(xi, -x)
    assert sw.eval(0, x, xi) == pytest.approx(m.eval(0, xi, -x), rel=1e-14)
    # one derivative each way
    assert sw.eval_partial(0, 1, 0, x, xi) == pytest.approx(
        -m.eval_partial(0, 0, 1, xi, -x), rel=1e-14)
    assert sw.eval_partial(0, 0, 1, x, xi) == pytest.approx(
        m.eval_partial(0, 1, 0, xi, -x), rel=1e-14)
    assert sw.eval_partial(1, 2, 1, x, xi) == pytest.approx(
        m.eval_partial(1, 1, 2, xi, -x), rel=1e-14)


def test_xi_degree():
    assert make_model("harmonic").xi_degree == 2
    assert make_model("harmonic", p1=[[1.0, 0, 3]]).xi_degree == 3
