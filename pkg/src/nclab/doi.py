"""Divided differences, Birman-Solomyak quadratures and double operator integrals."""

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .core import (
    NcOperator,
    coordinate_frame,
    hermitian_calculus,
    hermitian_eigh,
    masked,
    partial_derivative,
    singular_values,
)
from .lp import besov_norm, chi, chi_prime
from .symbol import Symbol, dequantize, quantize

FD_TOL = 1e-6
DD_EPS = 1e-8


class WindowError(ValueError):
    """A spectrum leaves the interval on which the windowed function equals ``F``."""


class QuadratureError(RuntimeError):
    def __init__(self, msg, achieved=None, nodes=None):
        super().__init__(msg)
        self.achieved = achieved
        self.nodes = nodes


class NotBandLimitedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar functions
# ---------------------------------------------------------------------------


def _taper(x, radius):
    return chi(2.0 * np.abs(x) / radius)


def _taper_prime(x, radius):
    return chi_prime(2.0 * np.abs(x) / radius) * 2.0 * np.sign(x) / radius


@dataclass(frozen=True)
class ScalarFunction:
    """Real function ``F`` with derivative ``dF``, optionally windowed.

    With ``window = R`` the evaluated function is ``F(x) chi(2|x|/R)``: equal to
    ``F`` on ``|x| <= R/2`` and zero for ``|x| >= R``.
    """

    F: object
    dF: object
    window: float = None
    name: str = "F"

    def with_window(self, radius):
        if not radius > 0:
            raise ValueError(f"window radius must be positive, got {radius}")
        return ScalarFunction(self.F, self.dF, float(radius), self.name)

    @property
    def interior(self):
        return np.inf if self.window is None else 0.5 * self.window

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = np.asarray(self.F(x), dtype=float)
        if self.window is None:
            return val
        return val * _taper(x, self.window)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        d = np.asarray(self.dF(x), dtype=float)
        if self.window is None:
            return d
        return d * _taper(x, self.window) + np.asarray(self.F(x), dtype=float) * _taper_prime(x, self.window)

    def G(self, x):
        """``(F(x) - F(0)) / x`` with the value ``F'(0)`` at the origin."""
        x = np.asarray(x, dtype=float)
        f0 = float(self(0.0))
        small = np.abs(x) < 1e-6
        safe = np.where(small, 1.0, x)
        out = (self(x) - f0) / safe
        if np.any(small):
            # second-order Taylor term keeps G smooth across the switch
            h = 1e-4
            d2 = (self(h) - 2.0 * f0 + self(-h)) / (h * h)
            out = np.where(small, self.derivative(0.0) + 0.5 * d2 * x, out)
        return out

    def consistency_error(self, radius=None, n=401, h=1e-5):
        """Max gap between ``F'`` and a central difference of ``F``."""
        r = radius if radius is not None else (self.window if self.window is not None else 4.0)
        x = np.linspace(-r, r, n)
        fd = (self(x + h) - self(x - h)) / (2.0 * h)
        return float(np.max(np.abs(fd - self.derivative(x))))


def polynomial_function(coeffs, name="poly"):
    """``sum_k coeffs[k] x^k``."""
    c = np.asarray(coeffs, dtype=float)
    dc = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
    return ScalarFunction(
        lambda x: np.polynomial.polynomial.polyval(x, c),
        lambda x: np.polynomial.polynomial.polyval(x, dc) + 0.0 * np.asarray(x),
        None,
        name,
    )


_NAMED = {
    "zero": lambda: ScalarFunction(lambda x: 0.0 * x, lambda x: 0.0 * x, None, "zero"),
    "identity": lambda: ScalarFunction(lambda x: 1.0 * x, lambda x: 1.0 + 0.0 * x, None, "identity"),
    "sin": lambda: ScalarFunction(np.sin, np.cos, None, "sin"),
    "cube": lambda: ScalarFunction(lambda x: x ** 3, lambda x: 3.0 * x ** 2, None, "cube"),
    "allen_cahn": lambda: ScalarFunction(lambda x: x - x ** 3, lambda x: 1.0 - 3.0 * x ** 2, None, "allen_cahn"),
}


def scalar_function(name, coeffs=None):
    """Look up a named nonlinearity; ``"poly"`` takes power-series coefficients."""
    if name == "poly":
        if not coeffs:
            raise ValueError("poly needs a non-empty coefficient list")
        return polynomial_function(coeffs)
    if name not in _NAMED:
        raise ValueError(f"unknown function {name!r}; known: {sorted(_NAMED) + ['poly']}")
    return _NAMED[name]()


def function_names():
    return sorted(_NAMED) + ["poly"]


def divided_difference(F, t, s):
    """``(F(t) - F(s)) / (t - s)``, or ``F'((t+s)/2)`` when ``|t - s| <= 1e-8``."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    d = t - s
    close = np.abs(d) <= DD_EPS
    safe = np.where(close, 1.0, d)
    out = np.where(close, F.derivative(0.5 * (t + s)), (F(t) - F(s)) / safe)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Birman-Solomyak quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _gauss_legendre01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _gl_error(n, c):
    """Worst error of the ``n``-point rule for ``int_0^1 exp(i c' eta)``, ``|c'| <= c``."""
    eta, w = _gauss_legendre01(n)
    cs = np.linspace(0.0, c, 33)[1:]
    if cs.size == 0 or c == 0:
        return 0.0
    approx = np.exp(1j * np.outer(cs, eta)) @ w
    exact = (np.exp(1j * cs) - 1.0) / (1j * cs)
    return float(np.max(np.abs(approx - exact)))


def _eta_nodes_needed(c, budget, n_max=1024):
    if _gl_error(1, c) <= budget:
        return 1
    lo, hi = 1, 2
    while _gl_error(hi, c) > budget:
        lo, hi = hi, 2 * hi
        if hi > n_max:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _gl_error(mid, c) <= budget:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class BSQuadrature:
    """Nodes ``omega = (eta, xi)`` with ``F^[1](t, s) ~ sum w alpha(t) beta(s)``.

    ``alpha(t, omega) = exp(i xi (1 - eta) t)`` and ``beta(s, omega) = exp(i xi eta s)``.
    """

    eta: np.ndarray
    xi: np.ndarray
    weights: np.ndarray
    window: float
    quad_tol: float
    achieved: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return int(self.weights.size)

    @property
    def a(self):
        return self.xi * (1.0 - self.eta)

    @property
    def b(self):
        return self.xi * self.eta

    @property
    def interior(self):
        return 0.5 * self.window if self.window else 0.0

    @property
    def total_mass(self):
        return float(np.sum(np.abs(self.weights)))

    def alpha(self, t):
        return np.exp(1j * np.outer(np.atleast_1d(t), self.a))

    def beta(self, s):
        return np.exp(1j * np.outer(np.atleast_1d(s), self.b))

    def kernel(self, t, s, backend=None):
        """``sum_omega w alpha(t_i) beta(s_j)`` on the product of two point sets."""
        return kernels.doi_kernel(np.atleast_1d(t), np.atleast_1d(s), self.a, self.b, self.weights, backend=backend)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["eta", "xi", "weight_re", "weight_im"])
            for e, x, w in zip(self.eta, self.xi, self.weights):
                wr.writerow([repr(float(e)), repr(float(x)), repr(float(w.real)), repr(float(w.imag))])


def _empty_quadrature(window, quad_tol):
    z = np.zeros(0)
    return BSQuadrature(z, z, z.astype(np.complex128), window, quad_tol, 0.0)


def _fourier_of_derivative(F, xi, n_x):
    """``g(xi) = (2 pi)^-1/2 int F'(x) exp(-i xi x) dx`` by the trapezoid rule on ``[-R, R]``."""
    R = F.window
    x = np.linspace(-R, R, n_x)
    dx = x[1] - x[0]
    d = F.derivative(x)
    out = np.empty(xi.size, dtype=np.complex128)
    for s in range(0, xi.size, 256):
        blk = xi[s:s + 256]
        out[s:s + 256] = np.exp(-1j * np.outer(blk, x)) @ d
    return out * dx / np.sqrt(2.0 * np.pi)


def bs_decompose(F, quad_tol=1e-8, max_nodes=100000, xi_max=1000.0, lattice=41, backend=None):
    """Product quadrature for ``F^[1](t, s) = int_0^1 F'((1-eta) t + eta s) d eta``.

    ``F'`` is written as a Fourier integral against ``g``; the xi-axis is a
    truncated trapezoid whose spacing makes the periodised copies of ``F'``
    miss the interior, and each xi node gets the fewest Gauss-Legendre eta
    nodes that keep its share of the error under ``quad_tol``.  The result is
    checked against the exact divided difference on a lattice of the interior.
    """
    if F.window is None:
        raise WindowError("bs_decompose needs a windowed (compactly supported) function")
    R = F.window
    Y = 0.5 * R
    lat = np.linspace(-Y, Y, lattice)
    exact = divided_difference(F, lat[:, None], lat[None, :])
    if not np.any(np.abs(F.derivative(np.linspace(-R, R, 2001))) > 0):
        return _empty_quadrature(R, quad_tol)

    dxi = 0.95 * 2.0 * np.pi / (R + Y)
    n_x = 2 * int(np.ceil(2.0 * R * xi_max / np.pi)) + 1
    # the per-node allocation is a worst-case bound; start loose and let the
    # lattice check decide
    inner = 16.0 * quad_tol
    for _ in range(6):
        K = int(np.ceil(xi_max / dxi))
        xi_pos = dxi * np.arange(K + 1)
        g_pos = _fourier_of_derivative(F, xi_pos, n_x)
        mass = np.abs(g_pos) * dxi / np.sqrt(2.0 * np.pi)
        # tail beyond node k counts both signs of xi
        tail = 2.0 * np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
        tail_share = inner / 10.0
        if mass[-max(1, K // 10):].sum() * 2.0 > tail_share:
            raise QuadratureError(
                f"Fourier transform of F' has not decayed by |xi| = {xi_max:g}; is F smooth and windowed?",
                achieved=float(tail[0]),
            )
        kmax = int(np.argmax(tail <= tail_share))
        xis = dxi * np.arange(-kmax, kmax + 1)
        gs = np.concatenate([g_pos[1:kmax + 1][::-1].conj(), g_pos[:kmax + 1]])
        ws = gs * dxi / np.sqrt(2.0 * np.pi)
        budget = 0.5 * inner / xis.size
        eta_all, xi_all, w_all = [], [], []
        for x, wx in zip(xis, ws):
            c = round(abs(x) * 2.0 * Y, 6)
            if abs(wx) == 0:
                continue
            n = _eta_nodes_needed(c, budget / abs(wx))
            if n is None:
                raise QuadratureError(f"eta rule needs more than 1024 nodes at xi = {x:g}")
            e, we = _gauss_legendre01(n)
            eta_all.append(e)
            xi_all.append(np.full(n, x))
            w_all.append(wx * we)
        eta = np.concatenate(eta_all)
        xi = np.concatenate(xi_all)
        w = np.concatenate(w_all)
        quad = BSQuadrature(eta, xi, w, R, quad_tol, meta={"dxi": dxi, "xi_cut": float(kmax * dxi)})
        approx = quad.kernel(lat, lat, backend=backend)
        err = float(np.max(np.abs(approx - exact)))
        quad.achieved = err
        if err <= quad_tol and quad.size <= max_nodes:
            return quad
        if quad.size > max_nodes:
            raise QuadratureError(
                f"quadrature needs {quad.size} nodes (budget {max_nodes}); achieved error {err:.2e}",
                achieved=err,
                nodes=quad.size,
            )
        inner /= 4.0
    raise QuadratureError(
        f"reconstruction error {err:.2e} above {quad.quad_tol:.1e} after refinement",
        achieved=err,
        nodes=quad.size,
    )


# ---------------------------------------------------------------------------
# double operator integrals
# ---------------------------------------------------------------------------


def _spectral_guard(w, F, label):
    bound = float(np.max(np.abs(w))) if w.size else 0.0
    if F.window is not None and bound > 0.5 * F.window + 1e-12:
        raise WindowError(
            f"spectrum of {label} reaches {bound:.4g}, outside the window interior [-{0.5 * F.window:.4g}, {0.5 * F.window:.4g}]"
        )


def loewner_difference(F, X, Y):
    """``F(X) - F(Y)`` assembled as the Loewner matrix ``F^[1](lambda_i, mu_j)`` times ``X - Y`` in the eigenbases."""
    lam, V = hermitian_eigh(X)
    mu, W = hermitian_eigh(Y)
    D = V.conj().T @ (X.entries - Y.entries) @ W
    L = divided_difference(F, lam[:, None], mu[None, :])
    return NcOperator(V @ (L * D) @ W.conj().T, X.theta)


def doi_apply(F, X, Y, quad, route="eigen", backend=None):
    """``sum_omega w alpha(X, omega) (X - Y) beta(Y, omega)``.

    ``route="eigen"`` contracts the node sum into an ``N x N`` kernel in the
    two eigenbases; ``route="direct"`` forms ``exp(i a X)`` and ``exp(i b Y)``
    node by node.
    """
    lam, V = hermitian_eigh(X)
    mu, W = hermitian_eigh(Y)
    _spectral_guard(lam, F, "X")
    _spectral_guard(mu, F, "Y")
    diff = X.entries - Y.entries
    if quad.size == 0:
        return NcOperator(np.zeros_like(diff), X.theta)
    if route == "eigen":
        D = V.conj().T @ diff @ W
        K = kernels.doi_kernel(lam, mu, quad.a, quad.b, quad.weights, backend=backend)
        return NcOperator(V @ (K * D) @ W.conj().T, X.theta)
    if route == "direct":
        out = np.zeros_like(diff)
        Vh, Wh = V.conj().T, W.conj().T
        for a, b, w in zip(quad.a, quad.b, quad.weights):
            left = (V * np.exp(1j * a * lam)) @ Vh
            right = (W * np.exp(1j * b * mu)) @ Wh
            out += w * (left @ diff @ right)
        return NcOperator(out, X.theta)
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# Meyer decomposition
# ---------------------------------------------------------------------------


@dataclass
class MeyerDecomposition:
    remainder: NcOperator
    series: NcOperator
    quadrature: BSQuadrature
    lows: list
    blocks: list
    function: ScalarFunction

    @property
    def total(self):
        return self.remainder + self.series


def _symbol_of(u, grid):
    if isinstance(u, Symbol):
        return u
    return dequantize(u, grid)


def band_limit_residual(f, part):
    """``||f - S_{J_max} f||_2 / ||f||_2`` on the grid."""
    rest = Symbol((1.0 - part.low_table(part.J_max)) * f.samples, f.grid)
    total = f.l2_norm()
    return rest.l2_norm() / total if total > 0 else 0.0


def _hermitize(u):
    a = u.entries
    return NcOperator(0.5 * (a + a.conj().T), u.theta)


def meyer_decompose(F, u, part, n=None, quad_tol=1e-10, band_tol=1e-8, backend=None):
    """``F(u) = F(0) + G(S_0 u) S_0 u + sum_{j>=1} DOI(S_j u, S_{j-1} u)[Delta_j u]``.

    ``u`` is a Hermitian-symmetric symbol (or an operator, dequantized on the
    partition grid) with ``u = S_{J_max} u``.
    """
    f = _symbol_of(u, part.grid)
    if n is None:
        if not isinstance(u, NcOperator):
            raise ValueError("truncation n is required for symbol input")
        n = u.dim
    res = band_limit_residual(f, part)
    if res > band_tol:
        raise NotBandLimitedError(f"u is not band-limited to S_{part.J_max}: tail {res:.2e} > {band_tol:.0e}")
    J = part.J_max
    lows = [_hermitize(quantize(Symbol(part.low_table(j) * f.samples, f.grid), n, check=False)) for j in range(J + 1)]
    blocks = [lows[0]] + [lows[j] - lows[j - 1] for j in range(1, J + 1)]
    a = max(float(np.abs(hermitian_eigh(s)[0]).max()) for s in lows)
    Fw = F.with_window(2.0 * a + 1.0)
    quad = bs_decompose(Fw, quad_tol, backend=backend)
    theta = part.grid.theta
    series = NcOperator(np.zeros((n, n)), theta)
    for j in range(1, J + 1):
        series = series + doi_apply(Fw, lows[j], lows[j - 1], quad, backend=backend)
    s0 = lows[0]
    G0 = hermitian_calculus(Fw.G, s0)
    remainder = float(Fw(0.0)) * NcOperator(np.eye(n), theta) + G0 @ s0
    return MeyerDecomposition(remainder, series, quad, lows, blocks, Fw)


def exp_derivative_norms(A, c, k):
    """``max_{|alpha| = m} ||D^alpha exp(i c A)||`` for ``m = 0..k`` on the masked block.

    Derivatives are commutator derivations applied to ``exp(i c A) - 1``
    (the identity is annihilated), norms taken on the leading block that
    excludes the truncation edge.
    """
    lam, V = hermitian_eigh(A)
    E = NcOperator((V * np.exp(1j * c * lam)) @ V.conj().T - np.eye(A.dim), A.theta)
    keep = masked(A.dim)
    out = [1.0]
    layer = {(0, 0): E}
    for m in range(1, k + 1):
        nxt = {}
        for (p, q), op in layer.items():
            nxt.setdefault((p + 1, q), partial_derivative(op, 1))
            nxt.setdefault((p, q + 1), partial_derivative(op, 2))
        out.append(max(float(np.linalg.norm(op.block(keep), 2)) for op in nxt.values()))
        layer = nxt
    return out


def exp_seminorm_profile(ops, cs, k, first_index=0):
    """``M_k`` of the sequence ``j -> exp(i c ops[j])`` (block index ``first_index + j``) for each ``c``."""
    prof = np.zeros(len(cs))
    for ic, c in enumerate(cs):
        best = 0.0
        for jj, A in enumerate(ops):
            j = first_index + jj
            norms = exp_derivative_norms(A, c, k)
            best = max(best, max(2.0 ** (-m * j) * v for m, v in enumerate(norms)))
        prof[ic] = best
    return prof


def coefficient_mass(decomp, k, n_c=9):
    """``sum_omega |w| M_k(alpha(S_j u, omega)) M_k(beta(S_{j-1} u, omega))``.

    The seminorms are even in ``c`` and are interpolated from ``n_c`` samples
    of ``|c|`` up to the largest node value.
    """
    q = decomp.quadrature
    if q.size == 0:
        return 0.0
    a, b = np.abs(q.a), np.abs(q.b)
    ca = np.linspace(0.0, a.max(), n_c)
    cb = np.linspace(0.0, b.max(), n_c)
    J = len(decomp.lows) - 1
    pa = exp_seminorm_profile(decomp.lows[1:J + 1], ca, k, first_index=1)
    pb = exp_seminorm_profile(decomp.lows[0:J], cb, k, first_index=1)
    return float(np.sum(np.abs(q.weights) * np.interp(a, ca, pa) * np.interp(b, cb, pb)))


def nemytskij_errors(F, u, part, n):
    """``||F(S_j u) - F(u)||_2`` for ``j = 0..J_max``."""
    f = _symbol_of(u, part.grid)
    U = _hermitize(quantize(f, n, check=False))
    FU = hermitian_calculus(F, U)
    out = []
    for j in range(part.J_max + 1):
        Sj = _hermitize(quantize(Symbol(part.low_table(j) * f.samples, f.grid), n, check=False))
        d = hermitian_calculus(F, Sj) - FU
        out.append(float(np.sqrt(part.grid.theta.trace_unit) * np.linalg.norm(d.entries)))
    return out


# ---------------------------------------------------------------------------
# Lipschitz ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzReport:
    ratio: float
    numerator: float
    denominator: float
    degenerate: bool
    symbol_tail: float


def intersection_norm(w, params, part):
    """``max(||w||_{B^s_{p,q}}, ||w||_inf)`` for an operator ``w``."""
    b = besov_norm(w, params, part, check=False)
    return max(b, float(singular_values(w)[0]))


def lipschitz_check(F, u, v, params, part, n=None):
    """``||F(u) - F(v)||_{B cap L_inf} / ||u - v||_{B cap L_inf}`` for Hermitian ``u``, ``v``.

    For ``u = v`` the report is flagged degenerate with ratio ``nan``.
    """
    if isinstance(u, Symbol):
        u = _hermitize(quantize(u, n, check=False))
    if isinstance(v, Symbol):
        v = _hermitize(quantize(v, n, check=False))
    for label, w in (("u", u), ("v", v)):
        _spectral_guard(hermitian_eigh(w)[0], F, label)
    d = u - v
    den = intersection_norm(d, params, part) if np.any(d.entries) else 0.0
    Fd = hermitian_calculus(F, u) - hermitian_calculus(F, v)
    num = intersection_norm(Fd, params, part) if np.any(Fd.entries) else 0.0
    g = dequantize(Fd, part.grid, check=False)
    edge = np.concatenate([g.samples[0], g.samples[-1], g.samples[:, 0], g.samples[:, -1]])
    peak = np.abs(g.samples).max()
    tail = float(np.abs(edge).max() / peak) if peak > 0 else 0.0
    if den == 0.0:
        return LipschitzReport(float("nan"), num, den, True, tail)
    return LipschitzReport(num / den, num, den, False, tail)


# ---------------------------------------------------------------------------
# noncommutative polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NcPolynomial:
    """``sum a_w X_{w_1} ... X_{w_l}`` over words ``w`` in ``0..arity-1``.

    ``terms`` maps a word (tuple of variable indices) to its coefficient;
    the empty word is the constant term.
    """

    terms: dict
    arity: int

    def __post_init__(self):
        for word in self.terms:
            if any(not (0 <= i < self.arity) for i in word):
                raise ValueError(f"word {word} uses a variable outside 0..{self.arity - 1}")

    @property
    def degree(self):
        return max((len(w) for w in self.terms), default=0)

    @classmethod
    def variable(cls, i, arity):
        return cls({(i,): 1.0}, arity)

    @classmethod
    def commutator(cls, i, j, arity):
        return cls({(i, j): 1.0, (j, i): -1.0}, arity)


def nc_polynomial_eval(f, args):
    """Evaluate ``f`` at the operators ``args``."""
    if len(args) != f.arity:
        raise ValueError(f"polynomial has arity {f.arity}, got {len(args)} arguments")
    n = args[0].dim
    theta = args[0].theta
    out = np.zeros((n, n), dtype=np.complex128)
    for word, coeff in f.terms.items():
        term = np.eye(n, dtype=np.complex128)
        for i in word:
            term = term @ args[i].entries
        out += coeff * term
    return NcOperator(out, theta)


def coordinate_args(theta, n):
    fr = coordinate_frame(theta, n)
    return [NcOperator(fr.x1, theta), NcOperator(fr.x2, theta)]
