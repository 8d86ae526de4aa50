import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclab.core import ThetaData, lp_norm
from nclab.lp import (
    BesovParams,
    bernstein_check,
    bernstein_constant,
    besov_from_spectra,
    besov_norm,
    besov_tail,
    besov_weight,
    block_profile,
    block_spectra,
    build_partition,
    chi,
    chi_prime,
    default_jmax,
    delta,
    divergence_symbol,
    heat_semigroup,
    heat_smoothing_norm,
    leray_project,
    low_pass,
    mikhlin_kernel_norm,
    psi,
    schrodinger_semigroup,
    sobolev_norm,
)
from nclab.sampling import random_divergence_free, random_symbol
from nclab.symbol import Grid, Symbol, quantize


def _smooth(grid, rng, **kw):
    return random_symbol(grid, rng, support=8.0, gauss=0.8, spread=2.0, **kw)


def test_chi_values():
    r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    c = chi(r)
    assert c[0] == c[1] == c[2] == 1.0
    assert c[3] == pytest.approx(0.5)
    assert c[4] == c[5] == 0.0
    assert np.all(np.diff(chi(np.linspace(0, 3, 301))) <= 0)


@given(st.floats(1.001, 1.999))
def test_chi_prime_matches_difference_quotient(r):
    h = 1e-6
    fd = (chi(np.array([r + h]))[0] - chi(np.array([r - h]))[0]) / (2 * h)
    assert abs(chi_prime(np.array([r]))[0] - fd) < 1e-6


def test_psi_support():
    r = np.linspace(0, 4, 4001)
    p = psi(r)
    assert np.all(p[(r < 0.5) | (r > 2.0)] == 0)
    assert np.all(p >= 0)


def test_default_grid_partition(part):
    assert default_jmax(8.0) == 2
    assert part.J_max == 2 and part.J_cover == 4


def test_partition_sums_to_one(part):
    total = sum(part.delta_table(j) for j in range(part.J_cover + 1))
    assert np.abs(total - 1.0).max() < 1e-15


def test_low_pass_telescopes(part):
    for j in range(part.J_cover + 1):
        acc = sum(part.delta_table(k) for k in range(j + 1))
        assert np.abs(acc - part.low_table(j)).max() < 1e-15


def test_partition_rejects_large_jmax(grid):
    with pytest.raises(ValueError):
        build_partition(grid, J_max=4)


def test_besov_params_validation():
    with pytest.raises(ValueError):
        BesovParams(1.0, 0.5, 2.0)


def test_low_frequency_symbol_lives_in_block_zero(grid, part, rng):
    # support inside |t| <= 1 meets only Delta_0, so every Besov norm is the L_p norm
    f = random_symbol(grid, rng, support=1.0, spread=1.0)
    U = quantize(f, 48)
    for s in (0.0, 1.0, 2.0):
        for p in (1.0, 2.0, np.inf):
            assert besov_norm(f, BesovParams(s, p, 2.0), part, 48) == pytest.approx(lp_norm(U, p), rel=1e-12)


def test_besov_monotone_in_s_and_q(grid, part, rng):
    f = _smooth(grid, rng)
    sp = block_spectra(f, part, 48)
    unit = grid.theta.trace_unit
    vals_s = [besov_from_spectra(sp, BesovParams(s, 2.0, 2.0), unit) for s in (0.0, 0.5, 1.0)]
    vals_q = [besov_from_spectra(sp, BesovParams(1.0, 2.0, q), unit) for q in (1.0, 2.0, np.inf)]
    assert vals_s == sorted(vals_s)
    assert vals_q == sorted(vals_q, reverse=True)


def test_besov_22_is_weighted_plancherel(grid, part, rng):
    f = _smooth(grid, rng)
    s = 1.0
    w = besov_weight(grid.radius, s, part.J_cover)
    exact = 2 * np.pi * grid.h * np.sqrt(np.sum(w * np.abs(f.samples) ** 2))
    # block cutoffs are sharper than f itself; the Riemann-sum quantization resolves them to ~1e-4
    assert besov_norm(f, BesovParams(s, 2.0, 2.0), part, 64) == pytest.approx(exact, rel=1e-3)


def test_block_spectra_needs_truncation(grid, part):
    with pytest.raises(ValueError):
        block_spectra(Symbol.zeros(grid), part)


def test_besov_tail(grid, part, rng):
    f = random_symbol(grid, rng, support=4.0, spread=2.0)
    assert besov_tail(f, part) < 1e-14
    g = _smooth(grid, rng)
    assert besov_tail(g, part) > 0


def test_sobolev_norm_zero_is_lp(grid, rng):
    f = _smooth(grid, rng)
    U = quantize(f, 48)
    assert sobolev_norm(f, 0.0, 2.0, n=48) == pytest.approx(lp_norm(U, 2.0), rel=1e-12)
    assert sobolev_norm(U, 0.0, 1.0, grid=grid) == pytest.approx(lp_norm(U, 1.0))


def test_sobolev_two_is_plancherel(grid, rng):
    f = _smooth(grid, rng)
    weighted = Symbol((1 + grid.radius ** 2) * f.samples, grid)
    assert sobolev_norm(f, 2.0, 2.0, n=64) == pytest.approx(weighted.l2_norm(), rel=1e-8)


def test_heat_semigroup_property(grid, rng):
    f = _smooth(grid, rng)
    a = heat_semigroup(0.1, heat_semigroup(0.2, f)).samples
    b = heat_semigroup(0.3, f).samples
    assert np.abs(a - b).max() < 1e-14
    with pytest.raises(ValueError):
        heat_semigroup(-1.0, f)


@pytest.mark.parametrize("p", [1.0, 2.0, np.inf])
def test_heat_contracts_lp(grid, rng, p):
    f = _smooth(grid, rng)
    u = quantize(f, 64)
    for t in (0.01, 0.1, 1.0):
        assert lp_norm(quantize(heat_semigroup(t, f), 64), p) <= lp_norm(u, p) * (1 + 1e-10)


def test_schrodinger_is_unitary(grid, rng):
    f = _smooth(grid, rng)
    assert schrodinger_semigroup(0.7, f).l2_norm() == pytest.approx(f.l2_norm(), rel=1e-14)


def test_semigroup_on_operator(grid, rng):
    f = _smooth(grid, rng)
    u = quantize(f, 64)
    a = heat_semigroup(0.05, u, grid)
    b = quantize(heat_semigroup(0.05, f), 64)
    assert np.abs((a - b).entries).max() < 1e-8
    with pytest.raises(ValueError):
        heat_semigroup(0.05, u)


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_heat_smoothing_bounds_random_symbols(grid, part, rng, s):
    # ||e^{t Delta} f||_{B^{s+1}_{2,2}} <= C(t) ||f||_{B^s_{2,2}}
    for t in (0.01, 0.1):
        C = heat_smoothing_norm(t, s)
        for _ in range(3):
            f = _smooth(grid, rng)
            lhs = besov_norm(heat_semigroup(t, f), BesovParams(s + 1, 2.0, 2.0), part, 64)
            rhs = besov_norm(f, BesovParams(s, 2.0, 2.0), part, 64)
            assert lhs <= C * rhs * (1 + 1e-6)


def test_heat_smoothing_rate():
    ts = np.geomspace(1e-3, 1e-1, 9)
    slope = np.polyfit(np.log(ts), np.log([heat_smoothing_norm(t, 1.0) for t in ts]), 1)[0]
    assert abs(slope + 0.5) < 0.1


def test_mikhlin_homogeneous_is_scale_free():
    vals = [mikhlin_kernel_norm(lambda a, b: np.hypot(a, b), 1.0, j) / 2.0 ** j for j in range(4)]
    assert max(vals) - min(vals) < 1e-10 * max(vals)


def test_bernstein_constant_rejects_order():
    with pytest.raises(ValueError):
        bernstein_constant(2.0, 1.0)


def test_bernstein_ratio_below_constant(rng):
    C = bernstein_constant(2.0, np.inf)
    for sigma in (0.5, 2.0):
        assert bernstein_check(sigma, 2.0, np.inf, rng, n_samples=3, n=64) <= C


def test_block_profile_zero_is_chi():
    r = np.linspace(0, 3, 31)
    assert np.array_equal(block_profile(r, 0), chi(r))


def test_delta_and_low_pass_split(grid, part, rng):
    f = _smooth(grid, rng)
    J = part.J_cover
    rebuilt = sum(delta(f, j, part).samples for j in range(J + 1))
    assert np.abs(rebuilt - low_pass(f, J, part).samples).max() < 1e-14
    assert np.abs(rebuilt - f.samples).max() < 1e-14


def test_leray_projection(grid, rng):
    f = (_smooth(grid, rng), _smooth(grid, rng))
    p = leray_project(f)
    assert np.abs(divergence_symbol(p).samples).max() < 1e-12
    pp = leray_project(p)
    assert max(np.abs(a.samples - b.samples).max() for a, b in zip(p, pp)) < 1e-14
    d = random_divergence_free(grid, rng)
    assert np.abs(divergence_symbol(d).samples).max() < 1e-12


def test_theta_scaling_of_units():
    g = Grid(24.0, 64, ThetaData(1 / 9))
    part = build_partition(g)
    assert part.J_max == 4
