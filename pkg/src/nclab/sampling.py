"""Seeded random test objects shared by the suites and the tests."""

import numpy as np

from .core import NcOperator
from .lp import chi
from .symbol import Symbol


def envelope(radius, support):
    """Smooth radial window: 1 on ``|t| <= support/2``, 0 on ``|t| >= support``."""
    return chi(2.0 * np.asarray(radius) / support)


def grid_units(grid):
    """Dilation factor relating ``grid`` to the reference grid ``T_max = 8``.

    Frequencies scale with it and positions with its inverse, so the same
    random classes fit any dilated grid (``theta0`` scaled by ``units^-2``).
    """
    return grid.T_max / 8.0


def random_symbol(grid, rng, support=4.0, n_modes=4, spread=1.5, hermitian=True, gauss=None, units=1.0):
    """``env(|t|) sum_k c_k exp(-i (x_k, t))`` with ``x_k`` in a disk of radius ``spread``.

    Real ``c_k`` make the symbol reflection-conjugate symmetric, i.e. the
    quantized element Hermitian.  ``gauss`` adds a factor ``exp(-|t|^2/2 gauss^2)``.
    ``support`` and ``gauss`` are multiplied by ``units``, ``spread`` divided.
    """
    support = support * units
    spread = spread / units
    gauss = None if gauss is None else gauss * units
    t1, t2 = grid.mesh
    r = np.hypot(t1, t2)
    ang = rng.uniform(0, 2 * np.pi, n_modes)
    rad = spread * np.sqrt(rng.uniform(0, 1, n_modes))
    xs = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    c = rng.normal(size=n_modes)
    if not hermitian:
        c = c + 1j * rng.normal(size=n_modes)
    f = np.zeros_like(t1, dtype=np.complex128)
    for k in range(n_modes):
        f += c[k] * np.exp(-1j * (xs[k, 0] * t1 + xs[k, 1] * t2))
    env = envelope(r, support)
    if gauss is not None:
        env = env * np.exp(-0.5 * (r / gauss) ** 2)
    return Symbol(env * f, grid)


def random_annulus_symbol(grid, rng, lo, hi, n_modes=4, spread=1.0, hermitian=True):
    """Random symbol supported in ``lo <= |t| <= hi`` (smooth annular window)."""
    t1, t2 = grid.mesh
    r = np.hypot(t1, t2)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    win = chi(2.0 * np.abs(r - mid) / half) if half > 0 else np.zeros_like(r)
    base = random_symbol(grid, rng, support=2.0 * grid.T_max, n_modes=n_modes, spread=spread, hermitian=hermitian)
    return Symbol(win * base.samples, grid)


def random_divergence_free(grid, rng, support=4.0, n_modes=4, spread=1.5):
    """Pair ``(i t2 g, -i t1 g)`` with ``g`` Hermitian-symmetric."""
    g = random_symbol(grid, rng, support=support, n_modes=n_modes, spread=spread, hermitian=True)
    t1, t2 = grid.mesh
    return Symbol(1j * t2 * g.samples, grid), Symbol(-1j * t1 * g.samples, grid)


def random_hermitian(theta, n, rng, norm=1.0):
    """Dense random Hermitian matrix rescaled to operator norm ``norm``."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (a + a.conj().T)
    h *= norm / np.abs(np.linalg.eigvalsh(h)).max()
    return NcOperator(h, theta)


def random_matrix(theta, n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return NcOperator(a / np.sqrt(n), theta)
