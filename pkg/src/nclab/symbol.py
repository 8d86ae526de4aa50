"""Sampled lambda-symbols and the bridge to truncated matrices.

A :class:`Symbol` stores ``f(t)`` on the grid ``t = h (i - M/2)``,
``i = 0..M-1`` in each axis, so that ``u = lambda(f) = int f(t) lambda(t) dt``.
"""

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import kernels
from .core import NcOperator, ThetaData

QUANTIZE_WARN = 1e-12
QUANTIZE_FAIL = 1e-6
DEQUANTIZE_FAIL = 1e-6
SUPPORT_TOL = 1e-12


class SupportOverflowError(ValueError):
    """A symbol does not fit on its grid."""


class GridMismatchError(ValueError):
    pass


class AliasingError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    T_max: float
    M: int
    theta: ThetaData

    def __post_init__(self):
        if self.M < 4 or self.M % 2:
            raise ValueError(f"M must be an even integer >= 4, got {self.M}")
        if not self.T_max > 0:
            raise ValueError(f"T_max must be positive, got {self.T_max}")
        object.__setattr__(self, "T_max", float(self.T_max))
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self):
        return 2.0 * self.T_max / self.M

    @property
    def axis(self):
        return self.h * (np.arange(self.M) - self.M // 2)

    @property
    def mesh(self):
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @property
    def radius(self):
        t1, t2 = self.mesh
        return np.hypot(t1, t2)

    @property
    def dual_axis(self):
        """Real-space axis whose DFT lands on :attr:`axis`."""
        dx = 2.0 * np.pi / (self.M * self.h)
        return dx * (np.arange(self.M) - self.M // 2)

    def describe(self):
        return {"T_max": self.T_max, "M": self.M, "theta0": self.theta.theta0}


class Symbol:
    __slots__ = ("samples", "grid")

    def __init__(self, samples, grid):
        a = np.array(samples, dtype=np.complex128)
        if a.shape != (grid.M, grid.M):
            raise ValueError(f"samples must have shape {(grid.M, grid.M)}, got {a.shape}")
        a.setflags(write=False)
        self.samples = a
        self.grid = grid

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros((grid.M, grid.M)), grid)

    @classmethod
    def from_function(cls, grid, fn):
        t1, t2 = grid.mesh
        return cls(fn(t1, t2), grid)

    def _same(self, other):
        if isinstance(other, Symbol):
            if other.grid != self.grid:
                raise GridMismatchError("symbols live on different grids")
            return other.samples
        return other

    def __add__(self, other):
        return Symbol(self.samples + self._same(other), self.grid)

    __radd__ = __add__

    def __sub__(self, other):
        return Symbol(self.samples - self._same(other), self.grid)

    def __neg__(self):
        return Symbol(-self.samples, self.grid)

    def __mul__(self, c):
        if isinstance(c, Symbol):
            raise TypeError("pointwise products of symbols are multipliers; use apply_multiplier")
        return Symbol(self.samples * c, self.grid)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Symbol(M={self.grid.M}, T_max={self.grid.T_max}, theta0={self.grid.theta.theta0})"

    def l2_norm(self):
        """``||lambda(f)||_2 = 2 pi ||f||_{L2}`` (Riemann sum)."""
        return float(2.0 * np.pi * self.grid.h * np.linalg.norm(self.samples))

    def reflected(self):
        """Samples of ``t -> f(-t)``; the unpaired node ``-T_max`` maps to zero."""
        return reflect_samples(self.samples)

    def reflection_residual(self):
        """``max |f(-t) - conj f(t)|`` relative to ``max |f|``; zero iff the symbol is Hermitian."""
        f = self.samples
        scale = max(np.abs(f).max(), 1e-300)
        return float(np.abs(self.reflected() - f.conj()).max() / scale)


def reflect_samples(f):
    out = np.zeros_like(f)
    out[1:, 1:] = f[:0:-1, :0:-1]
    return out


def _check_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("symbols live on different grids")


# ---------------------------------------------------------------------------
# twisted convolution
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _phase_table(theta0, h, M):
    half = M // 2
    n = np.arange(-2 * half * half, 2 * half * half + 1)
    tab = np.exp(0.5j * theta0 * h * h * n)
    tab.setflags(write=False)
    return tab, 2 * half * half


def support_box(f, tol=SUPPORT_TOL):
    """Integer bounding box ``(lo1, hi1, lo2, hi2)`` of ``|f| > tol * max|f|``."""
    a = np.abs(f)
    peak = a.max()
    if peak == 0:
        return None
    i, j = np.nonzero(a > tol * peak)
    half = f.shape[0] // 2
    return i.min() - half, i.max() - half, j.min() - half, j.max() - half


def twisted_convolution(f, g, backend=None, support_tol=SUPPORT_TOL):
    """``(f *_theta g)(r) = h^2 sum_s f(s) g(r - s) exp(i/2 (s, theta r))``.

    The phase makes ``quantize(f *_theta g) = quantize(f) quantize(g)``.
    """
    _check_grid(f, g)
    grid = f.grid
    bf, bg = support_box(f.samples, support_tol), support_box(g.samples, support_tol)
    if bf is None or bg is None:
        return Symbol.zeros(grid)
    half = grid.M // 2
    lo1, hi1 = bf[0] + bg[0], bf[1] + bg[1]
    lo2, hi2 = bf[2] + bg[2], bf[3] + bg[3]
    if lo1 < -half or lo2 < -half or hi1 > half - 1 or hi2 > half - 1:
        raise SupportOverflowError(
            "supp f + supp g leaves the grid: index box "
            f"[{lo1},{hi1}] x [{lo2},{hi2}] vs [{-half},{half - 1}]"
        )
    phase, offset = _phase_table(grid.theta.theta0, grid.h, grid.M)
    out = kernels.twisted_sum(f.samples, g.samples, phase, offset, backend=backend)
    return Symbol(grid.h ** 2 * out, grid)


# ---------------------------------------------------------------------------
# quantize / dequantize
# ---------------------------------------------------------------------------


class _Plan:
    """Radius grouping and radial tables for one (grid, N)."""

    def __init__(self, grid, n, backend):
        M = grid.M
        half = M // 2
        idx = np.arange(M) - half
        i1, i2 = np.meshgrid(idx, idx, indexing="ij")
        key = (i1 * i1 + i2 * i2).ravel()
        uniq, inv = np.unique(key, return_inverse=True)
        c = np.sqrt(grid.theta.theta0 / 2.0)
        self.radii = c * grid.h * np.sqrt(uniq.astype(float))
        self.index = inv
        # arg alpha with alpha ~ (-t2 + i t1)
        phi = np.arctan2(i1, -i2).ravel().astype(float)
        k = np.arange(-(n - 1), n)
        # (M^2, 2N-1): node-major so the grouping product reads it contiguously
        self.phases = np.exp(1j * np.outer(phi, k))
        self.group = sp.csr_matrix(
            (np.ones(M * M), (inv, np.arange(M * M))), shape=(uniq.size, M * M)
        )
        self.table = kernels.radial_table(self.radii, n, backend=backend)
        self.n = n


@lru_cache(maxsize=6)
def _plan(grid, n, backend):
    return _Plan(grid, n, backend)


def plan_for(grid, n, backend=None):
    from ._accel import resolve_backend

    return _plan(grid, int(n), resolve_backend(backend))


def boundary_mass(f):
    """Largest boundary sample relative to the largest sample."""
    a = np.abs(f)
    peak = a.max()
    if peak == 0:
        return 0.0
    edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
    return float(edge / peak)


def quantize(f, n, backend=None, check=True):
    """Riemann sum ``h^2 sum_t f(t) lambda(t)`` as an ``n x n`` matrix."""
    if n < 2:
        raise ValueError("truncation N must be at least 2")
    if check:
        bm = boundary_mass(f.samples)
        if bm > QUANTIZE_FAIL:
            raise SupportOverflowError(f"symbol boundary mass {bm:.2e} exceeds {QUANTIZE_FAIL:.0e}")
        if bm > QUANTIZE_WARN:
            warnings.warn(f"symbol boundary mass {bm:.2e} above {QUANTIZE_WARN:.0e}", stacklevel=2)
    grid = f.grid
    plan = plan_for(grid, n, backend)
    weighted = plan.phases * f.samples.ravel()[:, None]
    fk = np.asarray(plan.group @ weighted).T
    mat = kernels.assemble(plan.table, fk, backend=backend)
    return NcOperator(grid.h ** 2 * mat, grid.theta)


def dequantize(u, grid, backend=None, check=True):
    """``f(t) = (2 pi)^-2 tau(lambda(-t) u)`` sampled on ``grid``."""
    if u.theta != grid.theta:
        raise GridMismatchError("operator and grid carry different theta")
    plan = plan_for(grid, u.dim, backend)
    hk = kernels.project(plan.table, u.entries, backend=backend)
    vals = np.einsum("pk,pk->p", plan.phases.conj(), hk.T[plan.index])
    f = Symbol((grid.theta.theta0 / (2.0 * np.pi)) * vals.reshape(grid.M, grid.M), grid)
    if check:
        a = f.samples
        edge = np.concatenate([a[0], a[-1], a[1:-1, 0], a[1:-1, -1]])
        edge_l2 = 2.0 * np.pi * grid.h * np.linalg.norm(edge)
        total = np.sqrt(grid.theta.trace_unit) * np.linalg.norm(u.entries)
        if total > 0 and edge_l2 >= DEQUANTIZE_FAIL * total:
            raise SupportOverflowError(
                f"dequantized symbol has boundary mass {edge_l2 / total:.2e} of ||u||_2; grid too small"
            )
    return f


# ---------------------------------------------------------------------------
# classical convolution
# ---------------------------------------------------------------------------


def kernel_hat(K, grid):
    """``(2 pi)^-1 sum_x K(x) exp(-i (t, x)) dx^2`` on the symbol grid."""
    K = np.asarray(K, dtype=np.complex128)
    if K.shape != (grid.M, grid.M):
        raise GridMismatchError("kernel samples must match the grid size")
    dx = 2.0 * np.pi / (grid.M * grid.h)
    khat = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(K)))
    return khat * dx * dx / (2.0 * np.pi)


def classical_convolution(K, u, alias_tol=1e-8):
    """Symbol of ``K * lambda(f)``, namely ``2 pi Khat(t) f(t)``.

    ``K`` is sampled on ``grid.dual_axis`` in both variables.
    """
    K = np.asarray(K)
    a = np.abs(K)
    peak = a.max()
    if peak > 0:
        edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
        if edge > alias_tol * peak:
            raise AliasingError(f"kernel edge mass {edge / peak:.2e} exceeds {alias_tol:.0e}")
    khat = kernel_hat(K, u.grid)
    return Symbol(2.0 * np.pi * khat * u.samples, u.grid)


def kernel_lp_norm(K, grid, p):
    """``||K||_{L_p(R^2)}`` by Riemann sum on the dual grid."""
    dx = 2.0 * np.pi / (grid.M * grid.h)
    a = np.abs(np.asarray(K))
    if p == np.inf:
        return float(a.max())
    return float((np.sum(a ** p) * dx * dx) ** (1.0 / p))


# ---------------------------------------------------------------------------
# binary + JSON sidecar IO
# ---------------------------------------------------------------------------

FORMAT_NAME = "nclab-array"
FORMAT_VERSION = 1


def save_array(path, array, meta):
    """Write ``path.bin`` (complex128 little-endian, row-major) and ``path.json``."""
    path = Path(path)
    arr = np.ascontiguousarray(array, dtype="<c16")
    path.with_suffix(".bin").write_bytes(arr.tobytes(order="C"))
    sidecar = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dtype": "complex128-le-interleaved",
        "layout": "row-major",
        "shape": list(arr.shape),
    }
    sidecar.update(meta)
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_array(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not an {FORMAT_NAME} sidecar")
    data = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<c16")
    return data.reshape(meta["shape"]).astype(np.complex128), meta


def save_symbol(path, f):
    save_array(path, f.samples, {"kind": "symbol", **f.grid.describe()})


def load_symbol(path):
    data, meta = load_array(path)
    grid = Grid(meta["T_max"], meta["M"], ThetaData(meta["theta0"]))
    return Symbol(data, grid)
