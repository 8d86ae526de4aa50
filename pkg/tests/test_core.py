import os
import subprocess
import sys

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import hermite_functions
from nclab import kernels
from nclab.core import (
    DegenerateThetaError,
    NcOperator,
    NotHermitianError,
    ThetaData,
    coordinate_frame,
    hermitian_calculus,
    hermitian_residual,
    inner,
    lambda_matrix,
    lambda_op,
    lambda_op_expm,
    lp_norm,
    masked,
    partial_derivative,
    singular_values,
    trace,
)
from nclab.sampling import random_hermitian, random_matrix

coords = st.floats(-2.5, 2.5, allow_nan=False)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_theta_rejects_degenerate(bad):
    with pytest.raises(DegenerateThetaError):
        ThetaData(bad)


def test_trace_unit_is_two_pi_theta0():
    assert ThetaData(0.5).trace_unit == pytest.approx(np.pi)


def test_coordinates_commutator(theta):
    fr = coordinate_frame(theta, 40)
    c = fr.x1 @ fr.x2 - fr.x2 @ fr.x1
    # exact away from the last Fock state
    assert np.abs(c - 1j * theta.theta0 * np.eye(40))[:39, :39].max() < 1e-12


@pytest.mark.parametrize("theta0", [1.0, 0.7, 2.0])
@pytest.mark.parametrize("t", [(0.9, -0.6), (0.0, 1.3), (-2.0, 0.4)])
def test_lambda_matches_position_space_oracle(theta0, t):
    # <m| e^{i(a X + b P)} |n> = e^{iab/2} int psi_m(x) e^{iax} psi_n(x+b) dx
    th = ThetaData(theta0)
    n = 12
    a, b = np.asarray(t) * np.sqrt(theta0)
    x = np.linspace(-20, 20, 8001)
    dx = x[1] - x[0]
    oracle = np.exp(0.5j * a * b) * (hermite_functions(n, x) * np.exp(1j * a * x)) @ hermite_functions(n, x + b).T * dx
    assert np.abs(oracle - lambda_matrix(np.array(t), th, n)).max() < 1e-11


def test_radial_table_against_laguerre():
    mp.mp.dps = 30
    radii = np.array([0.0, 0.3, 1.0, 2.5, 5.0])
    n = 40
    tab = kernels.radial_table(radii, n)
    rng = np.random.default_rng(0)
    for _ in range(60):
        m, k = (int(v) for v in rng.integers(0, n, 2))
        p = int(rng.integers(0, radii.size))
        hi, lo = max(m, k), min(m, k)
        r = mp.mpf(radii[p])
        val = mp.sqrt(mp.factorial(lo) / mp.factorial(hi)) * r ** (hi - lo) * mp.exp(-r * r / 2) * mp.laguerre(lo, hi - lo, r * r)
        if m < k:
            val *= (-1) ** (k - m)
        assert abs(float(val) - tab[m, k, p]) < 1e-12


def test_backends_agree_on_radial_table():
    radii = np.linspace(0, 6, 7)
    a = kernels.radial_table(radii, 48, backend="numba")
    b = kernels.radial_table(radii, 48, backend="numpy")
    assert np.abs(a - b).max() < 1e-13


def test_lambda_agrees_with_expm_on_leading_block(theta):
    t = np.array([1.0, -0.7])
    a = lambda_op(t, theta, 64).entries
    b = lambda_op_expm(t, theta, 64).entries
    assert np.abs(a - b)[:32, :32].max() < 1e-10


@given(coords, coords)
def test_lambda_is_unitary_on_block(t1, t2):
    th = ThetaData(1.0)
    # displaced Fock states spread by ~2|alpha|sqrt(n); a third of N keeps the leak negligible
    u = lambda_matrix(np.array([t1, t2]), th, 96)
    assert np.abs((u.conj().T @ u)[:32, :32] - np.eye(32)).max() < 1e-10


@given(coords, coords, coords, coords)
def test_weyl_relation_on_half_block(a, b, c, d):
    th = ThetaData(1.0)
    t, s = np.array([a, b]), np.array([c, d])
    lhs = lambda_matrix(t, th, 128) @ lambda_matrix(s, th, 128)
    rhs = np.exp(0.5j * th.symplectic(t, s)) * lambda_matrix(t + s, th, 128)
    assert np.abs(lhs - rhs)[:32, :32].max() < 1e-10


def test_lambda_zero_is_identity(theta):
    assert np.allclose(lambda_matrix(np.zeros(2), theta, 10), np.eye(10))


def test_lambda_rejects_bad_input(theta):
    with pytest.raises(ValueError):
        lambda_matrix(np.array([np.nan, 0.0]), theta, 8)
    with pytest.raises(ValueError):
        lambda_matrix(np.zeros(2), theta, 1)


@pytest.mark.parametrize("j", [1, 2])
def test_derivative_of_lambda(theta, j):
    t = np.array([0.3, 0.8])
    u = lambda_op(t, theta, 64)
    du = partial_derivative(u, j).entries
    assert np.abs(du - 1j * t[j - 1] * u.entries)[:48, :48].max() < 1e-9


@given(st.integers(0, 2 ** 31 - 1))
def test_derivative_is_a_derivation(seed):
    th = ThetaData(1.3)
    rng = np.random.default_rng(seed)
    a, b = random_matrix(th, 12, rng), random_matrix(th, 12, rng)
    for j in (1, 2):
        lhs = partial_derivative(a @ b, j)
        rhs = partial_derivative(a, j) @ b + a @ partial_derivative(b, j)
        assert np.abs((lhs - rhs).entries).max() < 1e-10


def test_derivative_rejects_axis(theta):
    with pytest.raises(ValueError):
        partial_derivative(NcOperator(np.eye(3), theta), 3)


def test_trace_and_inner(theta):
    u = NcOperator(np.diag([1.0, 2.0, 3.0]), theta)
    assert trace(u) == pytest.approx(6 * theta.trace_unit)
    assert inner(u, u).real == pytest.approx(lp_norm(u, 2) ** 2)


def test_norms_of_projection(theta):
    p = NcOperator(np.diag([1.0, 0, 0, 0]), theta)
    for q in (1, 2, 4):
        assert lp_norm(p, q) == pytest.approx(theta.trace_unit ** (1 / q))
    assert lp_norm(p, np.inf) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lp_norm(p, 0.5)


@given(st.integers(0, 2 ** 31 - 1))
def test_holder(seed):
    th = ThetaData(0.8)
    rng = np.random.default_rng(seed)
    a, b = random_matrix(th, 10, rng), random_matrix(th, 10, rng)
    assert lp_norm(a @ b, 1) <= lp_norm(a, 2) * lp_norm(b, 2) * (1 + 1e-12)
    assert lp_norm(a @ b, 2) <= lp_norm(a, np.inf) * lp_norm(b, 2) * (1 + 1e-12)


def test_calculus_matches_polynomial(theta, rng):
    u = random_hermitian(theta, 20, rng)
    v = hermitian_calculus(lambda x: x ** 3 - 2 * x, u).entries
    a = u.entries
    assert np.abs(v - (a @ a @ a - 2 * a)).max() < 1e-12


def test_calculus_rejects_non_hermitian(theta, rng):
    u = random_matrix(theta, 8, rng)
    assert hermitian_residual(u) > 1e-3
    with pytest.raises(NotHermitianError):
        hermitian_calculus(np.sin, u)


def test_operator_arithmetic(theta):
    u = NcOperator(np.eye(3), theta)
    assert np.allclose((2 * u - u).entries, np.eye(3))
    with pytest.raises(TypeError):
        u * u
    with pytest.raises(ValueError):
        u + NcOperator(np.eye(4), theta)
    assert not u.entries.flags.writeable


def test_masked_default():
    assert masked(64) == 56
    assert masked(64, 32) == 32


def test_singular_values_sorted(theta, rng):
    sv = singular_values(random_matrix(theta, 9, rng))
    assert np.all(np.diff(sv) <= 0)


@pytest.mark.parametrize("flag,expected", [("numpy", "numpy"), ("numba", "numba"), ("", "numba")])
def test_backend_env_flag(flag, expected):
    env = dict(os.environ, NCLAB_BACKEND=flag)
    out = subprocess.run([sys.executable, "-c", "import nclab; print(nclab.DEFAULT_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_backend_env_flag_rejects_unknown():
    env = dict(os.environ, NCLAB_BACKEND="cuda")
    out = subprocess.run([sys.executable, "-c", "import nclab"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "NCLAB_BACKEND" in out.stderr
