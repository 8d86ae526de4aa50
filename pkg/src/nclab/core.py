"""Truncated oscillator model of the Moyal plane algebra.

Elements are N x N complex matrices in the Fock basis of the irreducible
representation.  The coordinates are

    x1 = sqrt(theta0/2) (a + a^dag),   x2 = i sqrt(theta0/2) (a^dag - a),

so that ``[x1, x2] = i theta0`` and ``lambda(t) = exp(i (t1 x1 + t2 x2))`` is
the displacement operator ``D(alpha)`` with
``alpha = sqrt(theta0/2) (-t2 + i t1)``.  With ``theta = theta0 [[0,-1],[1,0]]``
these satisfy ``lambda(t) lambda(s) = exp(i/2 (t, theta s)) lambda(t + s)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import kernels

HERMITIAN_TOL = 1e-10


class DegenerateThetaError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaData:
    """Scalar-symplectic deformation ``theta = theta0 [[0,-1],[1,0]]``."""

    theta0: float
    d: int = field(default=2, init=False)

    def __post_init__(self):
        t0 = float(self.theta0)
        if not np.isfinite(t0) or t0 <= 0:
            raise DegenerateThetaError(f"theta0 must be a positive finite number, got {self.theta0!r}")
        object.__setattr__(self, "theta0", t0)

    @property
    def theta(self):
        return self.theta0 * np.array([[0.0, -1.0], [1.0, 0.0]])

    @property
    def theta_inv(self):
        return np.array([[0.0, 1.0], [-1.0, 0.0]]) / self.theta0

    @property
    def trace_unit(self):
        """``det(2 pi theta)^(1/2)``; the trace of a rank-one projection."""
        return 2.0 * np.pi * self.theta0

    def symplectic(self, t, s):
        """``(t, theta s)``."""
        return float(np.dot(t, self.theta @ np.asarray(s, dtype=float)))


class NcOperator:
    """Truncated matrix representative of an element of the algebra."""

    __slots__ = ("entries", "theta")

    def __init__(self, entries, theta):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        a.setflags(write=False)
        self.entries = a
        self.theta = theta

    @property
    def dim(self):
        return self.entries.shape[0]

    def _wrap(self, a):
        return NcOperator(a, self.theta)

    def _other(self, other):
        if isinstance(other, NcOperator):
            if other.dim != self.dim:
                raise ValueError("truncation sizes differ")
            return other.entries
        return other

    def __add__(self, other):
        return self._wrap(self.entries + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.entries - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.entries)

    def __neg__(self):
        return self._wrap(-self.entries)

    def __mul__(self, c):
        if isinstance(c, NcOperator):
            raise TypeError("use @ for operator products")
        return self._wrap(self.entries * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._wrap(self.entries / c)

    def __matmul__(self, other):
        return self._wrap(self.entries @ self._other(other))

    def __repr__(self):
        return f"NcOperator(dim={self.dim}, theta0={self.theta.theta0})"

    @property
    def H(self):
        return adjoint(self)

    def block(self, k):
        """Leading ``k x k`` block (the truncation mask)."""
        return self.entries[:k, :k]


def identity(theta, n):
    return NcOperator(np.eye(n), theta)


def masked(n, width=None):
    """Size of the leading block kept by the default edge mask (N/8)."""
    if width is None:
        width = max(1, n // 8)
    return n - width


# ---------------------------------------------------------------------------
# coordinates and lambda(t)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoordinateFrame:
    x1: np.ndarray
    x2: np.ndarray
    a: np.ndarray


@lru_cache(maxsize=32)
def _frame(theta0, n):
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(np.complex128)
    c = np.sqrt(theta0 / 2.0)
    x1 = c * (a + a.T)
    x2 = 1j * c * (a.T - a)
    for arr in (a, x1, x2):
        arr.setflags(write=False)
    return CoordinateFrame(x1, x2, a)


def coordinate_frame(theta, n):
    if n < 2:
        raise ValueError("truncation N must be at least 2")
    return _frame(theta.theta0, int(n))


def displacement_alpha(t, theta):
    """Complex displacement amplitude of ``lambda(t)``."""
    t = np.asarray(t, dtype=float)
    c = np.sqrt(theta.theta0 / 2.0)
    return c * (-t[..., 1] + 1j * t[..., 0])


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"truncation N must be an integer >= 2, got {n!r}")
    return int(n)


def lambda_matrix(t, theta, n, backend=None):
    """Raw ``n x n`` array of ``lambda(t)`` from the closed-form matrix elements."""
    n = _check_n(n)
    t = np.asarray(t, dtype=float)
    if t.shape != (2,) or not np.all(np.isfinite(t)):
        raise ValueError(f"t must be a finite 2-vector, got {t!r}")
    alpha = displacement_alpha(t, theta)
    r = abs(alpha)
    tab = kernels.radial_table(np.array([r]), n, backend=backend)[:, :, 0]
    k = np.subtract.outer(np.arange(n), np.arange(n))
    phase = np.exp(1j * k * np.angle(alpha)) if r > 0 else 1.0
    return tab * phase


def lambda_op(t, theta, n, backend=None):
    """Weyl unitary ``exp(i (t1 x1 + t2 x2))`` truncated to ``n`` Fock states."""
    return NcOperator(lambda_matrix(t, theta, n, backend=backend), theta)


def lambda_op_expm(t, theta, n):
    """``lambda(t)`` as the matrix exponential of the truncated generator.

    Only the leading block agrees with :func:`lambda_op`; kept as a
    cross-check of the closed form.
    """
    fr = coordinate_frame(theta, n)
    gen = 1j * (t[0] * fr.x1 + t[1] * fr.x2)
    return NcOperator(sla.expm(gen), theta)


# ---------------------------------------------------------------------------
# trace, norms, adjoint
# ---------------------------------------------------------------------------


def trace(u):
    """``tau(u) = det(2 pi theta)^(1/2) Tr(u)``."""
    return complex(u.theta.trace_unit * np.trace(u.entries))


def singular_values(u):
    return sla.svdvals(u.entries)


def schatten_from_singular(sv, p, unit):
    if p == np.inf:
        return float(sv.max(initial=0.0))
    return float((unit * np.sum(sv ** p)) ** (1.0 / p))


def lp_norm(u, p):
    """Norm in ``L_p`` of the algebra, i.e. a Schatten norm weighted by the trace unit."""
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    return schatten_from_singular(singular_values(u), p, u.theta.trace_unit)


def inner(u, v):
    """``<u, v> = tau(u^* v)``."""
    return complex(u.theta.trace_unit * np.vdot(u.entries, v.entries))


def adjoint(u):
    return NcOperator(u.entries.conj().T, u.theta)


def hermitian_residual(u):
    a = u.entries
    scale = max(np.linalg.norm(a), 1e-300)
    return float(np.linalg.norm(a - a.conj().T) / scale)


# ---------------------------------------------------------------------------
# derivations
# ---------------------------------------------------------------------------


def commutator(x, u):
    return x @ u - u @ x


def partial_derivative(u, j):
    """``d_j u = i sum_k (theta^-1)_{jk} [x_k, u]`` on the truncated frame.

    This gives ``d_j lambda(t) = i t_j lambda(t)`` away from the truncation
    edge and is an exact derivation on matrices.
    """
    if j not in (1, 2):
        raise ValueError("axis j must be 1 or 2")
    fr = coordinate_frame(u.theta, u.dim)
    tinv = u.theta.theta_inv
    a = u.entries
    out = tinv[j - 1, 0] * commutator(fr.x1, a) + tinv[j - 1, 1] * commutator(fr.x2, a)
    return NcOperator(1j * out, u.theta)


# ---------------------------------------------------------------------------
# functional calculus
# ---------------------------------------------------------------------------


def hermitian_eigh(u, tol=HERMITIAN_TOL):
    res = hermitian_residual(u)
    if res > tol:
        raise NotHermitianError(f"input is not Hermitian (relative residual {res:.3e} > {tol:.1e})")
    a = 0.5 * (u.entries + u.entries.conj().T)
    return np.linalg.eigh(a)


def hermitian_calculus(F, u, tol=HERMITIAN_TOL):
    """``F(u) = V F(Lambda) V^*`` for Hermitian ``u``."""
    w, v = hermitian_eigh(u, tol)
    fw = np.asarray(F(w))
    return NcOperator((v * fw) @ v.conj().T, u.theta)
