import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad

from nclab.core import NcOperator, hermitian_calculus
from nclab.doi import (
    NcPolynomial,
    NotBandLimitedError,
    QuadratureError,
    WindowError,
    bs_decompose,
    coefficient_mass,
    coordinate_args,
    divided_difference,
    doi_apply,
    exp_derivative_norms,
    function_names,
    lipschitz_check,
    loewner_difference,
    meyer_decompose,
    nc_polynomial_eval,
    nemytskij_errors,
    scalar_function,
)
from nclab.lp import BesovParams
from nclab.sampling import random_hermitian, random_symbol
from nclab.symbol import quantize

points = st.floats(-1.4, 1.4, allow_nan=False)


@pytest.fixture(scope="module")
def sin_quad():
    return bs_decompose(scalar_function("sin").with_window(3.0), 1e-8)


def _band_limited(grid, rng, n, norm):
    f = random_symbol(grid, rng, support=4.0, spread=2.0)
    top = np.linalg.norm(quantize(f, n).entries, 2)
    return f * (norm / top)


def test_named_functions():
    assert "poly" in function_names() and "allen_cahn" in function_names()
    with pytest.raises(ValueError):
        scalar_function("tanh")
    with pytest.raises(ValueError):
        scalar_function("poly")
    p = scalar_function("poly", [1.0, 0.0, 2.0])
    assert p(np.array(3.0)) == 19.0
    assert p.derivative(np.array(3.0)) == 12.0


@pytest.mark.parametrize("name", ["sin", "cube", "allen_cahn", "identity"])
def test_derivative_is_consistent(name):
    F = scalar_function(name)
    assert F.consistency_error() < 1e-6
    assert F.with_window(2.0).consistency_error() < 1e-6


def test_window_profile():
    F = scalar_function("cube").with_window(2.0)
    x = np.array([0.3, -1.0, 1.5, 2.0, -3.0])
    v = F(x)
    assert v[0] == pytest.approx(0.027) and v[1] == -1.0
    # halfway through the taper
    assert v[2] == pytest.approx(0.5 * 1.5 ** 3)
    assert v[3] == 0.0 and v[4] == 0.0
    assert F.interior == 1.0
    with pytest.raises(ValueError):
        F.with_window(0.0)


def test_divided_difference_values():
    F = scalar_function("cube")
    # (t^3 - s^3) / (t - s) = t^2 + t s + s^2
    assert divided_difference(F, 2.0, 1.0) == pytest.approx(7.0)
    assert divided_difference(F, 1.5, 1.5) == pytest.approx(6.75)
    assert divided_difference(F, 1.0, 1.0 + 1e-10) == pytest.approx(3.0, rel=1e-9)


@given(points, points)
def test_divided_difference_is_mean_of_derivative(t, s):
    F = scalar_function("sin").with_window(3.0)
    ref = scipy_quad(lambda e: float(F.derivative(np.array((1 - e) * t + e * s))), 0.0, 1.0, epsabs=1e-13)[0]
    assert divided_difference(F, t, s) == pytest.approx(ref, abs=1e-9)


def test_g_is_smooth_at_origin():
    F = scalar_function("sin")
    x = np.array([-1e-3, -1e-7, 0.0, 1e-7, 1e-3])
    assert np.abs(F.G(x) - np.sinc(x / np.pi)).max() < 1e-9


def test_quadrature_reproduces_divided_difference(sin_quad):
    # off the internal check lattice
    rng = np.random.default_rng(4)
    t = rng.uniform(-1.5, 1.5, 37)
    s = rng.uniform(-1.5, 1.5, 29)
    F = scalar_function("sin").with_window(3.0)
    exact = divided_difference(F, t[:, None], s[None, :])
    assert np.abs(sin_quad.kernel(t, s) - exact).max() < 1e-8
    assert sin_quad.achieved <= 1e-8
    assert sin_quad.interior == 1.5


def test_quadrature_backends(sin_quad):
    t = np.linspace(-1.5, 1.5, 17)
    a = sin_quad.kernel(t, t, backend="numba")
    b = sin_quad.kernel(t, t, backend="numpy")
    assert np.abs(a - b).max() < 1e-12


def test_zero_function_gives_empty_quadrature(theta, rng):
    q = bs_decompose(scalar_function("zero").with_window(2.0))
    assert q.size == 0 and q.total_mass == 0.0
    X = random_hermitian(theta, 6, rng, norm=0.5)
    Y = random_hermitian(theta, 6, rng, norm=0.5)
    assert not np.any(doi_apply(scalar_function("zero").with_window(2.0), X, Y, q).entries)


def test_quadrature_needs_window():
    with pytest.raises(WindowError):
        bs_decompose(scalar_function("sin"))


def test_quadrature_node_budget():
    with pytest.raises(QuadratureError) as err:
        bs_decompose(scalar_function("sin").with_window(3.0), 1e-8, max_nodes=10)
    assert err.value.nodes > 10


def test_quadrature_csv(tmp_path, sin_quad):
    sin_quad.to_csv(tmp_path / "q.csv")
    with open(tmp_path / "q.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eta", "xi", "weight_re", "weight_im"]
    assert len(rows) == sin_quad.size + 1
    assert float(rows[1][1]) == sin_quad.xi[0]


def test_routes_agree(theta, rng, sin_quad):
    F = scalar_function("sin").with_window(3.0)
    X = random_hermitian(theta, 8, rng, norm=1.0)
    Y = random_hermitian(theta, 8, rng, norm=1.0)
    a = doi_apply(F, X, Y, sin_quad, route="eigen").entries
    b = doi_apply(F, X, Y, sin_quad, route="direct").entries
    assert np.abs(a - b).max() < 1e-11
    with pytest.raises(ValueError):
        doi_apply(F, X, Y, sin_quad, route="other")


def test_loewner_is_exact(theta, rng):
    F = scalar_function("allen_cahn")
    X = random_hermitian(theta, 20, rng, norm=2.0)
    Y = random_hermitian(theta, 20, rng, norm=2.0)
    lhs = hermitian_calculus(F, X) - hermitian_calculus(F, Y)
    assert np.abs((loewner_difference(F, X, Y) - lhs).entries).max() < 1e-12


def test_doi_matches_loewner(theta, rng, sin_quad):
    F = scalar_function("sin").with_window(3.0)
    for _ in range(3):
        X = random_hermitian(theta, 24, rng, norm=1.0)
        Y = random_hermitian(theta, 24, rng, norm=1.0)
        L = loewner_difference(F, X, Y).entries
        D = doi_apply(F, X, Y, sin_quad).entries
        assert np.linalg.norm(D - L) <= 1e-6 * np.linalg.norm(L)


def test_spectral_guard(theta, rng, sin_quad):
    F = scalar_function("sin").with_window(3.0)
    X = random_hermitian(theta, 8, rng, norm=2.0)
    with pytest.raises(WindowError):
        doi_apply(F, X, X, sin_quad)


@pytest.mark.parametrize("name", ["sin", "cube"])
def test_meyer_reconstruction(grid, part, rng, name):
    F = scalar_function(name)
    n = 48
    f = _band_limited(grid, rng, n, 0.8)
    md = meyer_decompose(F, f, part, n)
    U = quantize(f, n).entries
    FU = hermitian_calculus(F, NcOperator(0.5 * (U + U.conj().T), grid.theta)).entries
    assert np.linalg.norm(md.total.entries - FU) <= 1e-6 * np.linalg.norm(FU)
    assert len(md.blocks) == part.J_max + 1
    assert np.isfinite(coefficient_mass(md, 1, n_c=3))


def test_meyer_needs_band_limit(grid, part, rng):
    f = random_symbol(grid, rng, support=8.0, spread=2.0)
    with pytest.raises(NotBandLimitedError):
        meyer_decompose(scalar_function("sin"), f, part, 32)
    with pytest.raises(ValueError):
        meyer_decompose(scalar_function("sin"), _band_limited(grid, rng, 32, 0.5), part)


def test_nemytskij_errors_vanish_at_top(grid, part, rng):
    f = _band_limited(grid, rng, 48, 1.0)
    errs = nemytskij_errors(scalar_function("sin"), f, part, 48)
    assert len(errs) == part.J_max + 1
    assert errs[-1] < 1e-12
    assert errs[0] > errs[-1]


def test_lipschitz_degenerate(grid, part, rng):
    F = scalar_function("sin").with_window(3.0)
    f = _band_limited(grid, rng, 32, 0.8)
    rep = lipschitz_check(F, f, f, BesovParams(0.5, 2.0, 2.0), part, 32)
    assert rep.degenerate and np.isnan(rep.ratio)


def test_lipschitz_ratio_finite(grid, part, rng):
    F = scalar_function("sin").with_window(3.0)
    f, g = _band_limited(grid, rng, 32, 0.8), _band_limited(grid, rng, 32, 0.8)
    rep = lipschitz_check(F, f, g, BesovParams(0.5, 2.0, 2.0), part, 32)
    assert not rep.degenerate
    assert 0 < rep.ratio <= 1.0


def test_exp_derivatives_of_zero(theta):
    norms = exp_derivative_norms(NcOperator(np.zeros((16, 16)), theta), 1.0, 3)
    assert norms == [1.0, 0.0, 0.0, 0.0]


def test_nc_polynomial(theta):
    X = coordinate_args(theta, 24)
    c = nc_polynomial_eval(NcPolynomial.commutator(0, 1, 2), X).entries
    assert np.abs(c - 1j * theta.theta0 * np.eye(24))[:23, :23].max() < 1e-12
    p = NcPolynomial({(): 2.0, (0, 0): 1.0}, 2)
    assert p.degree == 2
    v = nc_polynomial_eval(p, X).entries
    assert np.allclose(v, 2 * np.eye(24) + X[0].entries @ X[0].entries)
    with pytest.raises(ValueError):
        nc_polynomial_eval(NcPolynomial.variable(0, 1), X)
    with pytest.raises(ValueError):
        NcPolynomial({(2,): 1.0}, 2)
