"""Elementary pseudodifferential operators and the Bony decomposition."""

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .core import NcOperator, singular_values
from .lp import delta, derivative_multiplier, low_pass
from .symbol import GridMismatchError, Symbol, quantize, twisted_convolution

K_MAX = 4


def _multi_indices(order):
    return [(a, order - a) for a in range(order + 1)]


@dataclass
class CoefficientSequence:
    """Coefficients ``a_j`` for blocks ``j = 0..len-1``.

    ``symbols`` holds the lambda-symbols when known; derivatives are taken on
    the symbol side.  ``None`` entries stand for multiples of the identity.
    """

    operators: list
    symbols: list
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.operators)

    @classmethod
    def from_symbols(cls, symbols, n):
        ops = [quantize(f, n, check=False) for f in symbols]
        return cls(ops, list(symbols))

    @classmethod
    def identity(cls, length, theta, n):
        eye = NcOperator(np.eye(n), theta)
        return cls([eye] * length, [None] * length)

    def scaled(self, c):
        syms = [None if f is None else f * c for f in self.symbols]
        return CoefficientSequence([op * c for op in self.operators], syms)

    def derivative_norm(self, j, alpha):
        key = (j, alpha)
        if key not in self._cache:
            f = self.symbols[j]
            op = self.operators[j]
            if alpha == (0, 0):
                val = float(singular_values(op)[0])
            elif f is None:
                val = 0.0
            else:
                d = derivative_multiplier(f.grid, alpha).values * f.samples
                val = float(singular_values(quantize(Symbol(d, f.grid), op.dim, check=False))[0])
            self._cache[key] = val
        return self._cache[key]


def m_seminorm(a, k):
    """``M_k(a) = sup_{j, |alpha| <= k} 2^{-|alpha| j} ||D^alpha a_j||_inf``."""
    if k > K_MAX:
        raise ValueError(f"k={k} exceeds k_max={K_MAX}")
    best = 0.0
    for j in range(len(a)):
        for order in range(int(k) + 1):
            for alpha in _multi_indices(order):
                best = max(best, 2.0 ** (-order * j) * a.derivative_norm(j, alpha))
    return best


def seminorm_order(s):
    """Integer order used for ``M_{s+2}``."""
    return int(ceil(s + 2 - 1e-12))


def elementary_apply(a, b, u, part, n):
    """``T_{a,b} u = sum_j a_j quantize(Delta_j u) b_j``."""
    if len(a) != len(b):
        raise ValueError("coefficient sequences have different lengths")
    if len(a) > part.J_cover + 1:
        raise ValueError(f"sequence length {len(a)} exceeds the {part.J_cover + 1} grid blocks")
    out = np.zeros((n, n), dtype=np.complex128)
    for j in range(len(a)):
        dj = quantize(delta(u, j, part), n, check=False).entries
        out += a.operators[j].entries @ dj @ b.operators[j].entries
    return NcOperator(out, u.grid.theta)


@dataclass(frozen=True)
class BonySplit:
    low: NcOperator
    high: NcOperator
    resonant: NcOperator
    tolerance: float

    @property
    def total(self):
        return self.low + self.high + self.resonant


def _blocks(u, part, n, J):
    return [quantize(delta(u, j, part), n, check=False).entries for j in range(J + 1)]


def _lows(u, part, n, J):
    return [quantize(low_pass(u, j, part), n, check=False).entries for j in range(J + 1)]


def bony_split(u, v, part, n, J=None):
    """``uv = Pi_low(u, v) + Pi_high(u, v) + R(u, v)``.

    ``Pi_low = sum_{j>=3} S_{j-3}u Delta_j v``, ``Pi_high`` swaps the roles and
    ``R = sum_{|j-k|<=2} Delta_j u Delta_k v``.  Blocks run to ``J`` (default
    ``J_cover``, where the partition sums to one on the whole grid).
    """
    if u.grid != v.grid:
        raise GridMismatchError("operands live on different grids")
    J = part.J_cover if J is None else J
    du, dv = _blocks(u, part, n, J), _blocks(v, part, n, J)
    su, sv = _lows(u, part, n, J), _lows(v, part, n, J)
    low = np.zeros((n, n), dtype=np.complex128)
    high = np.zeros_like(low)
    res = np.zeros_like(low)
    for j in range(3, J + 1):
        low += su[j - 3] @ dv[j]
        high += du[j] @ sv[j - 3]
    for j in range(J + 1):
        for k in range(max(0, j - 2), min(J, j + 2) + 1):
            res += du[j] @ dv[k]
    theta = u.grid.theta
    tail_u = Symbol((1.0 - part.low_table(J)) * u.samples, u.grid)
    tail_v = Symbol((1.0 - part.low_table(J)) * v.samples, v.grid)
    U = quantize(u, n, check=False)
    V = quantize(v, n, check=False)
    nu_inf = singular_values(U)[0]
    nv_inf = singular_values(V)[0]
    tol = (
        2.0 * tail_u.l2_norm() * nv_inf
        + 2.0 * nu_inf * tail_v.l2_norm()
        + 1e-12 * (J + 1) ** 2 * np.sqrt(theta.trace_unit) * np.linalg.norm(U.entries) * nv_inf
    )
    return BonySplit(NcOperator(low, theta), NcOperator(high, theta), NcOperator(res, theta), float(tol))


def product_symbol(u, v):
    """Symbol of ``quantize(u) quantize(v)`` via the twisted convolution."""
    return twisted_convolution(u, v)


def block_product_symbol(u, v, j, k, part):
    """Symbol of ``Delta_j u Delta_k v``."""
    return twisted_convolution(delta(u, j, part), delta(v, k, part))
