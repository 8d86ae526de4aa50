"""Littlewood-Paley blocks, Fourier multipliers and function-space norms."""

from dataclasses import dataclass

import numpy as np

from .core import NcOperator, schatten_from_singular, singular_values
from .symbol import AliasingError, GridMismatchError, Symbol, dequantize, quantize

# ---------------------------------------------------------------------------
# the smooth cutoff
# ---------------------------------------------------------------------------


def _sigma(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def chi(r):
    """Smooth step: 1 on ``r <= 1``, 0 on ``r >= 2``."""
    r = np.asarray(r, dtype=float)
    a = _sigma(2.0 - r)
    b = _sigma(r - 1.0)
    out = np.where(r <= 1.0, 1.0, 0.0)
    mid = (r > 1.0) & (r < 2.0)
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


def chi_prime(r):
    """Derivative of :func:`chi`."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mid = (r > 1.0) & (r < 2.0)
    x, y = 2.0 - r[mid], r[mid] - 1.0
    a, b = np.exp(-1.0 / x), np.exp(-1.0 / y)
    da, db = -a / (x * x), b / (y * y)
    out[mid] = (da * b - a * db) / (a + b) ** 2
    return out


def psi(r):
    """Annular profile ``chi(r) - chi(2r)`` supported in ``1/2 <= r <= 2``."""
    return chi(r) - chi(2.0 * np.asarray(r, dtype=float))


def block_profile(r, j):
    """Radial profile of the block ``Delta_j`` (``j = 0`` absorbs the low cutoff)."""
    r = np.asarray(r, dtype=float)
    if j == 0:
        return chi(r)
    return psi(r / 2.0 ** j)


def low_profile(r, j):
    """Radial profile of ``S_j = sum_{k <= j} Delta_k``."""
    if j < 0:
        return np.zeros_like(np.asarray(r, dtype=float))
    return chi(np.asarray(r, dtype=float) / 2.0 ** j)


def default_jmax(T_max):
    return int(np.floor(np.log2(np.sqrt(2.0) * T_max))) - 1


@dataclass(frozen=True)
class DyadicPartition:
    """Tabulated cutoffs on a symbol grid.

    ``Phi`` and ``Psi[j]`` for ``j <= J_max`` are the resolved blocks.  The
    tables ``blocks`` run on to ``J_cover`` so that they sum to one at every
    grid node; the blocks past ``J_max`` only carry the grid tail.
    """

    grid: object
    J_max: int
    J_cover: int
    Phi: np.ndarray
    Psi: tuple
    blocks: tuple

    def delta_table(self, j):
        if j < 0 or j > self.J_cover:
            return np.zeros((self.grid.M, self.grid.M))
        return self.blocks[j]

    def low_table(self, j):
        return low_profile(self.grid.radius, min(j, self.J_cover))


def build_partition(grid, J_max=None):
    if J_max is None:
        J_max = default_jmax(grid.T_max)
    if J_max < 0 or 2.0 ** (J_max + 1) > np.sqrt(2.0) * grid.T_max + 1e-12:
        raise ValueError(
            f"J_max={J_max} too large for T_max={grid.T_max}: need 2^(J_max+1) <= sqrt(2) T_max"
        )
    rho = grid.radius
    J_cover = max(J_max, int(np.ceil(np.log2(max(rho.max(), 1.0)))))
    phi = chi(2.0 * rho)
    psis = tuple(psi(rho / 2.0 ** j) for j in range(J_max + 1))
    blocks = tuple(block_profile(rho, j) for j in range(J_cover + 1))
    for arr in (phi, *psis, *blocks):
        arr.setflags(write=False)
    return DyadicPartition(grid, int(J_max), int(J_cover), phi, psis, blocks)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiplierSpec:
    """Samples ``m(t)`` on a grid; shape ``(M, M)`` or ``(d, d, M, M)`` for matrix symbols."""

    values: np.ndarray
    grid: object

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.all(np.isfinite(v)):
            raise ValueError("multiplier has non-finite values")

    @classmethod
    def from_radial(cls, grid, fn):
        return cls(fn(grid.radius), grid)

    @classmethod
    def from_function(cls, grid, fn):
        t1, t2 = grid.mesh
        return cls(fn(t1, t2), grid)

    def __mul__(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("multipliers live on different grids")
        return MultiplierSpec(self.values * other.values, self.grid)


def apply_multiplier(m, u):
    if m.grid != u.grid:
        raise GridMismatchError("multiplier and symbol grids differ")
    return Symbol(m.values * u.samples, u.grid)


def heat_multiplier(grid, t):
    return MultiplierSpec.from_radial(grid, lambda r: np.exp(-t * r * r))


def schrodinger_multiplier(grid, t):
    return MultiplierSpec.from_radial(grid, lambda r: np.exp(-1j * t * r * r))


def bessel_multiplier(grid, s):
    return MultiplierSpec.from_radial(grid, lambda r: (1.0 + r * r) ** (s / 2.0))


def derivative_multiplier(grid, alpha):
    """``D^alpha`` acts on symbols as multiplication by ``(i t)^alpha``."""
    t1, t2 = grid.mesh
    return MultiplierSpec((1j * t1) ** alpha[0] * (1j * t2) ** alpha[1], grid)


def delta(u, j, part):
    return Symbol(part.delta_table(j) * u.samples, u.grid)


def low_pass(u, j, part):
    return Symbol(part.low_table(j) * u.samples, u.grid)


# ---------------------------------------------------------------------------
# Besov / Sobolev norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must be >= 1 or inf, got {v}")


def _as_symbol(u, grid, check=True):
    if isinstance(u, Symbol):
        return u
    if isinstance(u, NcOperator):
        return dequantize(u, grid, check=check)
    raise TypeError(f"expected Symbol or NcOperator, got {type(u).__name__}")


def block_spectra(u, part, n=None, check=True):
    """Singular values of ``quantize(Delta_j u)`` for ``j = 0..J_cover``."""
    if n is None:
        if not isinstance(u, NcOperator):
            raise ValueError("truncation n is required for symbol input")
        n = u.dim
    f = _as_symbol(u, part.grid, check=check)
    out = []
    for j in range(part.J_cover + 1):
        tab = part.blocks[j]
        if not np.any(tab * np.abs(f.samples)):
            out.append(np.zeros(0))
            continue
        out.append(singular_values(quantize(Symbol(tab * f.samples, f.grid), n, check=False)))
    return out


def besov_from_spectra(spectra, params, unit):
    norms = np.array([schatten_from_singular(sv, params.p, unit) if sv.size else 0.0 for sv in spectra])
    w = 2.0 ** (np.arange(len(norms)) * params.s) * norms
    if params.q == np.inf:
        return float(w.max(initial=0.0))
    return float(np.sum(w ** params.q) ** (1.0 / params.q))


def besov_norm(u, params, part, n=None, check=True):
    """``(sum_j 2^{jsq} ||Delta_j u||_p^q)^{1/q}`` with Schatten norms of quantized blocks."""
    spectra = block_spectra(u, part, n, check=check)
    return besov_from_spectra(spectra, params, part.grid.theta.trace_unit)


def besov_tail(u, part, n=None):
    """``||u - S_{J_max} u||_2``: the part of ``u`` the resolved blocks miss."""
    f = _as_symbol(u, part.grid)
    rest = Symbol((1.0 - part.low_table(part.J_max)) * f.samples, f.grid)
    return rest.l2_norm()


def sobolev_norm(u, s, p, n=None, grid=None):
    """``||J^s u||_p`` with ``J^s`` the multiplier ``(1 + |t|^2)^{s/2}``."""
    if isinstance(u, NcOperator):
        if grid is None:
            raise ValueError("grid is required for operator input")
        n = u.dim if n is None else n
        f = dequantize(u, grid)
    else:
        f = u
    if n is None:
        raise ValueError("truncation n is required for symbol input")
    if s == 0 and isinstance(u, NcOperator):
        return _lp(u, p)
    g = apply_multiplier(bessel_multiplier(f.grid, s), f)
    return _lp(quantize(g, n, check=False), p)


def _lp(u, p):
    return schatten_from_singular(singular_values(u), p, u.theta.trace_unit)


# ---------------------------------------------------------------------------
# semigroups
# ---------------------------------------------------------------------------


def _apply_symbolwise(u, mult_fn, grid=None):
    if isinstance(u, (list, tuple)):
        return type(u)(_apply_symbolwise(v, mult_fn, grid) for v in u)
    if isinstance(u, Symbol):
        return apply_multiplier(mult_fn(u.grid), u)
    if isinstance(u, NcOperator):
        if grid is None:
            raise ValueError("grid is required for operator input")
        f = dequantize(u, grid)
        return quantize(apply_multiplier(mult_fn(grid), f), u.dim, check=False)
    raise TypeError(f"unsupported state {type(u).__name__}")


def heat_semigroup(t, u, grid=None):
    """``e^{t Delta}``: multiplier ``exp(-t |xi|^2)``."""
    if t < 0:
        raise ValueError("heat semigroup needs t >= 0")
    return _apply_symbolwise(u, lambda g: heat_multiplier(g, t), grid)


def schrodinger_semigroup(t, u, grid=None):
    """``e^{i t Delta}``: multiplier ``exp(-i t |xi|^2)``."""
    return _apply_symbolwise(u, lambda g: schrodinger_multiplier(g, t), grid)


def besov_weight(r, s, jmax):
    """``w_s(r) = sum_j 4^{js} Delta_j(r)^2`` so that ``||u||_{B^s_{2,2}}^2 = (2pi)^2 int w_s |f|^2``."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for j in range(jmax + 1):
        out += 4.0 ** (j * s) * block_profile(r, j) ** 2
    return out


def heat_smoothing_norm(t, s, n_points=200001):
    """Exact ``||e^{t Delta}||_{B^s_{2,2} -> B^{s+1}_{2,2}}``.

    Both norms are weighted ``L_2`` norms of the symbol, so the operator norm
    is ``sup_r exp(-t r^2) sqrt(w_{s+1}(r) / w_s(r))``.  The radial axis runs
    far enough that the Gaussian has decayed below ``1e-16``.
    """
    rmax = max(16.0, np.sqrt(40.0 / t))
    jmax = int(np.ceil(np.log2(rmax))) + 1
    r = np.linspace(0.0, rmax, n_points)
    ratio = besov_weight(r, s + 1, jmax) / besov_weight(r, s, jmax)
    return float(np.max(np.exp(-t * r * r) * np.sqrt(ratio)))


# ---------------------------------------------------------------------------
# kernel side: Mikhlin and Bernstein
# ---------------------------------------------------------------------------


def multiplier_kernel(m, half_width, n=512):
    """Kernel ``K(x) = (2 pi)^-2 int m(xi) e^{i x xi} d xi`` by a dense DFT.

    ``m(xi1, xi2)`` is sampled on ``[-W, W)^2`` with ``n`` points per axis.
    Returns ``(K, dx)``; ``K`` is centred.
    """
    dxi = 2.0 * half_width / n
    xi = dxi * (np.arange(n) - n // 2)
    x1, x2 = np.meshgrid(xi, xi, indexing="ij")
    vals = np.asarray(m(x1, x2), dtype=np.complex128)
    K = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(vals))) * (n * dxi) ** 2 / (2.0 * np.pi) ** 2
    dx = 2.0 * np.pi / (n * dxi)
    return K, dx


def kernel_edge_fraction(K, frame=0.05):
    a = np.abs(K)
    n = a.shape[0]
    w = max(1, int(frame * n))
    inner = a[w:n - w, w:n - w].sum()
    total = a.sum()
    return float((total - inner) / total) if total > 0 else 0.0


def mikhlin_kernel_norm(m, s, j, n=512, edge_tol=0.01):
    """``||(m Psi_j)^vee||_{L_1(R^2)}`` for the block ``j`` (commutative computation).

    The frequency window is rescaled with the block (half-width ``2^{j+3}``),
    so the same relative resolution is used for every ``j``.  ``s`` is the
    order the caller asserts for ``m``; the return value is the raw norm and
    the expected bound is ``~ 2^{s j}``.
    """
    W = 2.0 ** (j + 3)

    def mj(a, b):
        r = np.hypot(a, b)
        return m(a, b) * psi(r / 2.0 ** j)

    K, dx = multiplier_kernel(mj, W, n)
    frac = kernel_edge_fraction(K)
    if frac > edge_tol:
        raise AliasingError(f"kernel mass near grid edge {frac:.2%} exceeds {edge_tol:.0%}")
    return float(np.abs(K).sum() * dx * dx)


def bernstein_constant(p, q, n=1024, half_width=4.0):
    """``||K_1||_{L_r}`` with ``K_1`` the kernel of ``chi(|xi|)`` and ``1 + 1/q = 1/r + 1/p``.

    This is the constant the Young-inequality proof of the Bernstein bound
    produces for symbols supported in the unit ball.
    """
    if p > q:
        raise ValueError("Bernstein check needs p <= q")
    inv_r = 1.0 + 1.0 / q - 1.0 / p
    K, dx = multiplier_kernel(lambda a, b: chi(np.hypot(a, b)), half_width, n)
    a = np.abs(K)
    if inv_r == 0:
        return float(a.max())
    r = 1.0 / inv_r
    return float((np.sum(a ** r) * dx * dx) ** (1.0 / r))


def bernstein_check(sigma, p, q, rng, n_samples=8, n=96, theta=None, M=64, n_modes=4):
    """Largest ``||u||_q / (sigma^{2(1/p - 1/q)} ||u||_p)`` over random symbols in ``B(0, sigma)``.

    The grid spacing shrinks with ``sigma`` (``h = min(1/4, sigma/8)``) so the
    support is always resolved.
    """
    from .core import ThetaData
    from .sampling import random_symbol
    from .symbol import Grid

    if p > q:
        raise ValueError("Bernstein check needs p <= q")
    theta = theta or ThetaData(1.0)
    h = min(0.25, sigma / 8.0)
    grid = Grid(h * M / 2.0, M, theta)
    scale = sigma ** (2.0 * (1.0 / p - (0.0 if q == np.inf else 1.0 / q)))
    worst = 0.0
    for _ in range(n_samples):
        f = random_symbol(grid, rng, support=sigma, n_modes=n_modes, spread=1.0, hermitian=False)
        u = quantize(f, n, check=False)
        sv = singular_values(u)
        up = schatten_from_singular(sv, p, theta.trace_unit)
        uq = schatten_from_singular(sv, q, theta.trace_unit)
        worst = max(worst, uq / (scale * up))
    return worst


# ---------------------------------------------------------------------------
# Leray projection
# ---------------------------------------------------------------------------


def leray_multiplier(grid):
    t1, t2 = grid.mesh
    r2 = t1 * t1 + t2 * t2
    safe = np.where(r2 > 0, r2, 1.0)
    m = np.empty((2, 2, grid.M, grid.M))
    m[0, 0] = 1.0 - t1 * t1 / safe
    m[0, 1] = -t1 * t2 / safe
    m[1, 0] = m[0, 1]
    m[1, 1] = 1.0 - t2 * t2 / safe
    origin = r2 == 0
    m[0, 0][origin] = 1.0
    m[1, 1][origin] = 1.0
    m[0, 1][origin] = 0.0
    m[1, 0][origin] = 0.0
    return MultiplierSpec(m, grid)


def leray_project(u):
    """Apply ``delta_jk - t_j t_k / |t|^2`` to a pair of symbols (identity at the origin)."""
    u1, u2 = u
    if u1.grid != u2.grid:
        raise GridMismatchError("vector components live on different grids")
    m = leray_multiplier(u1.grid).values
    f1, f2 = u1.samples, u2.samples
    return (
        Symbol(m[0, 0] * f1 + m[0, 1] * f2, u1.grid),
        Symbol(m[1, 0] * f1 + m[1, 1] * f2, u1.grid),
    )


def divergence_symbol(u):
    """``sum_j i t_j f_j`` pointwise."""
    t1, t2 = u[0].grid.mesh
    return Symbol(1j * t1 * u[0].samples + 1j * t2 * u[1].samples, u[0].grid)
