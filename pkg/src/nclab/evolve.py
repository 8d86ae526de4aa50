"""Mild-solution time stepping and the Allen-Cahn, NLS and Navier-Stokes analogues.

Two state representations are used.  Scalar parabolic problems live on the
symbol grid, where the Laplacian is the exact multiplier ``-|xi|^2``.  The
Navier-Stokes and NLS analogues live on ``N x N`` matrices with the
commutator Laplacian ``Delta_N = d_1^2 + d_2^2``; there the integration by
parts identities behind energy conservation and dissipation hold exactly.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .core import (
    NcOperator,
    coordinate_frame,
    hermitian_calculus,
    hermitian_residual,
    partial_derivative,
    singular_values,
)
from .lp import besov_norm, heat_multiplier
from .symbol import Symbol, dequantize, quantize


class EvolutionError(RuntimeError):
    """The step size collapsed below ``min_dt`` or a step could not be accepted."""

    def __init__(self, msg, record=None):
        super().__init__(msg)
        self.record = record


# ---------------------------------------------------------------------------
# phi functions
# ---------------------------------------------------------------------------


def phi1(z):
    """``(e^z - 1) / z`` with the removable singularity filled in."""
    z = np.asarray(z)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(safe) / safe)


def phi2(z):
    """``(e^z - 1 - z) / z^2``; a Taylor series for ``|z| < 1`` avoids the cancellation."""
    z = np.asarray(z)
    small = np.abs(z) < 1.0
    safe = np.where(small, 1.0, z)
    series = np.zeros_like(z, dtype=np.result_type(z, float))
    # sum_k z^k / (k + 2)!, Horner form; 1/20! is below double precision
    for k in range(17, -1, -1):
        series = series * z + 1.0 / math.factorial(k + 2)
    return np.where(small, series, (np.expm1(safe) - safe) / (safe * safe))


# ---------------------------------------------------------------------------
# linear parts
# ---------------------------------------------------------------------------


class MultiplierLinearPart:
    """Diagonal generator ``L`` given by its values on the state array."""

    def __init__(self, values):
        self.values = np.asarray(values)

    def apply(self, fn, h, state):
        return fn(h * self.values) * state

    def generator(self, state):
        return self.values * state


def heat_linear_part(grid):
    return MultiplierLinearPart(-(grid.radius ** 2))


class MatrixLaplacian:
    """``Delta_N = d_1^2 + d_2^2`` on ``N x N`` matrices, diagonalised.

    In the Fock basis ``Delta_N = -(ad_a ad_a* + ad_a* ad_a) / theta0``; it
    preserves ``k = m - n`` and each diagonal block is real symmetric
    tridiagonal, so functions of ``Delta_N`` are applied block by block.
    """

    def __init__(self, theta, n):
        self.theta = theta
        self.n = n
        fr = coordinate_frame(theta, n)
        a = sp.csr_matrix(np.real(fr.a))
        eye = sp.identity(n, format="csr")

        def ad(A):
            return sp.kron(A, eye, format="csr") - sp.kron(eye, A.T, format="csr")

        ada, adc = ad(a), ad(a.T.tocsr())
        lap = (-(ada @ adc + adc @ ada) / theta.theta0).tocsr()
        self.index = []
        self.eigvals = []
        self.eigvecs = []
        for k in range(-(n - 1), n):
            m = np.arange(max(0, k), min(n, n + k))
            idx = m * n + (m - k)
            blk = lap[idx][:, idx].toarray()
            w, v = np.linalg.eigh(blk)
            w = np.minimum(w, 0.0)
            self.index.append(idx)
            self.eigvals.append(w)
            self.eigvecs.append(v)
        self._lap = lap

    def _k_slot(self, k):
        return k + self.n - 1

    def apply(self, fn, h, U):
        """``fn(h Delta_N) U`` for any complex ``U``."""
        flat = np.asarray(U, dtype=np.complex128).reshape(-1)
        out = np.empty_like(flat)
        for idx, w, v in zip(self.index, self.eigvals, self.eigvecs):
            out[idx] = v @ (fn(h * w) * (v.T @ flat[idx]))
        return out.reshape(self.n, self.n)

    def apply_hermitian(self, fn, h, U):
        """Same as :meth:`apply` for Hermitian ``U`` and real ``fn``; the result is exactly Hermitian."""
        U = np.asarray(U, dtype=np.complex128)
        flat = U.reshape(-1)
        out = np.zeros((self.n, self.n), dtype=np.complex128)
        oflat = out.reshape(-1)
        for k in range(0, self.n):
            s = self._k_slot(k)
            idx, w, v = self.index[s], self.eigvals[s], self.eigvecs[s]
            oflat[idx] = v @ (np.real(fn(h * w)) * (v.T @ flat[idx]))
        lower = np.tril(out, -1)
        diag = np.real(np.diag(out))
        return lower + lower.conj().T + np.diag(diag)

    def pseudo_inverse_neg(self, U):
        """``(-Delta_N)^+ U``; the kernel is spanned by the identity."""

        def inv(w):
            out = np.zeros_like(w)
            nz = w < -1e-12
            out[nz] = -1.0 / w[nz]
            return out

        return self.apply(inv, 1.0, U)

    def matvec(self, U):
        return (self._lap @ np.asarray(U, dtype=np.complex128).reshape(-1)).reshape(self.n, self.n)


class MatrixLinearPart:
    """``L = Delta_N`` (``schrodinger=False``) or ``i Delta_N``, acting componentwise."""

    def __init__(self, lap, schrodinger=False, hermitian=False):
        self.lap = lap
        self.schrodinger = schrodinger
        self.hermitian = hermitian and not schrodinger

    def apply(self, fn, h, state):
        hh = 1j * h if self.schrodinger else h
        f = self.lap.apply_hermitian if self.hermitian else self.lap.apply
        if state.ndim == 3:
            return np.stack([f(fn, hh, c) for c in state])
        return f(fn, hh, state)

    def generator(self, state):
        c = 1j if self.schrodinger else 1.0
        if state.ndim == 3:
            return np.stack([c * self.lap.matvec(s) for s in state])
        return c * self.lap.matvec(state)


# ---------------------------------------------------------------------------
# problems and records
# ---------------------------------------------------------------------------


@dataclass
class EvolutionProblem:
    """``u' = L u + N(u)`` in mild form.

    ``metrics(u, N(u))`` returns a dict of named diagnostics; ``checks`` maps
    a diagnostic name to the threshold above which a step is rejected.
    ``norm_X``/``norm_Y`` give the blow-up ratio ``||N(u)||_X / ||u||_Y``.
    """

    linear: object
    nonlinearity: object
    norm_X: object
    norm_Y: object
    smoothing_exponent: float = 0.0
    metrics: object = None
    checks: dict = field(default_factory=dict)
    project: object = None
    nonlinear_flow: object = None
    to_snapshot: object = None
    name: str = "problem"

    def __post_init__(self):
        if not self.smoothing_exponent < 1:
            raise ValueError("the smoothing exponent must be < 1 for the mild formulation")


@dataclass(frozen=True)
class StepConfig:
    dt: float = 1e-2
    method: str = "etd1"
    picard: bool = False
    picard_tol: float = 1e-10
    picard_max: int = 50
    min_dt: float = 1e-6
    blowup_norm: float = 1e8
    ratio_cap: float = 1e6
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in ("etd1", "etd2rk", "strang"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.min_dt <= self.dt:
            raise ValueError("min_dt must lie in (0, dt]")


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    states: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def append(self, t, row):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        bad = [k for k, v in row.items() if not np.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite diagnostics {bad} at t={t}")
        self.times.append(float(t))
        self.rows.append(dict(row))

    def series(self, name):
        return np.array([r[name] for r in self.rows])

    @property
    def columns(self):
        return sorted(self.rows[0]) if self.rows else []

    def to_csv(self, path=None):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        wr.writerow(["t"] + cols)
        for t, r in zip(self.times, self.rows):
            wr.writerow([f"{t:.17g}"] + [f"{r[c]:.17g}" for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _norm(state):
    return float(np.linalg.norm(state))


def _etd_step(problem, u, h, method, nu):
    L = problem.linear
    if method == "etd1":
        return L.apply(np.exp, h, u) + h * L.apply(phi1, h, nu)
    a = L.apply(np.exp, h, u) + h * L.apply(phi1, h, nu)
    na = problem.nonlinearity(a)
    return a + h * L.apply(phi2, h, na - nu)


def _strang_step(problem, u, h):
    L = problem.linear
    half = L.apply(np.exp, 0.5 * h, u)
    mid = problem.nonlinear_flow(h, half)
    return L.apply(np.exp, 0.5 * h, mid)


def _picard(problem, u, h, nu, cfg):
    """Iterate ``v -> e^{hL} u + h (phi1 - phi2)(hL) N(u) + h phi2(hL) N(v)``.

    Returns the fixed point and the largest observed contraction factor, or
    ``None`` when the iteration fails to contract.
    """
    L = problem.linear
    base = L.apply(np.exp, h, u) + h * (L.apply(phi1, h, nu) - L.apply(phi2, h, nu))
    v = base + h * L.apply(phi2, h, nu)
    prev = None
    rho = 0.0
    scale = max(_norm(u), 1e-300)
    for _ in range(cfg.picard_max):
        nv = base + h * L.apply(phi2, h, problem.nonlinearity(v))
        d = _norm(nv - v)
        if prev is not None and prev > 0:
            rho = max(rho, d / prev)
            if d >= prev:
                return None, rho
        v, prev = nv, d
        if d <= cfg.picard_tol * scale:
            return v, rho
    return None, rho


def mild_solve(problem, u0, T, cfg):
    """Advance ``u(t) = e^{tL} u0 + int_0^t e^{(t-s)L} N(u(s)) ds`` to time ``T``.

    Steps are exponential integrators (``etd1``, ``etd2rk``) or Strang
    splitting with an exact nonlinear flow.  A rejected step (failed check
    or non-contracting Picard loop) halves ``dt``; below ``cfg.min_dt`` the
    solve fails with :class:`EvolutionError`.  A non-finite state or one
    whose norm passes ``cfg.blowup_norm`` ends the run with status
    ``"blowup"`` and the last finite record kept.
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    if cfg.method == "strang" and problem.nonlinear_flow is None:
        raise ValueError("strang splitting needs an exact nonlinear flow")
    rec = TrajectoryRecord()
    u = np.array(u0, dtype=np.complex128)
    t = 0.0
    dt = cfg.dt
    nu = problem.nonlinearity(u)
    rec.append(t, _row(problem, u, nu))
    _snapshot(problem, rec, t, u, cfg, 0, force=True)
    step = 0
    while t < T * (1 - 1e-12):
        h = min(dt, T - t)
        if cfg.method == "strang":
            new = _strang_step(problem, u, h)
        elif cfg.picard:
            new, rho = _picard(problem, u, h, nu, cfg)
            if new is None:
                dt /= 2.0
                if dt < cfg.min_dt:
                    rec.status = "failed"
                    rec.message = f"Picard map not contracting (factor {rho:.3g}) down to dt={cfg.min_dt:g}"
                    raise EvolutionError(rec.message, rec)
                continue
        else:
            new = _etd_step(problem, u, h, cfg.method, nu)
        if problem.project is not None:
            new = problem.project(new)
        size = _norm(new)
        if not np.isfinite(size) or size > cfg.blowup_norm:
            rec.status = "blowup"
            rec.message = f"state norm {size:.3e} at t={t + h:.6g} passed {cfg.blowup_norm:.1e}"
            return rec
        new_nu = problem.nonlinearity(new)
        row = _row(problem, new, new_nu)
        failed = [k for k, lim in problem.checks.items() if row[k] > lim]
        if failed:
            dt /= 2.0
            if dt < cfg.min_dt:
                rec.status = "failed"
                rec.message = f"checks {failed} failing down to dt={cfg.min_dt:g}"
                raise EvolutionError(rec.message, rec)
            continue
        u, nu = new, new_nu
        t += h
        step += 1
        rec.append(t, row)
        rec.dts.append(h)
        _snapshot(problem, rec, t, u, cfg, step)
    _snapshot(problem, rec, t, u, cfg, step, force=True)
    return rec


def _row(problem, u, nu):
    ny = problem.norm_Y(u)
    row = {"ratio": problem.norm_X(nu) / ny if ny > 0 else 0.0}
    if problem.metrics is not None:
        row.update(problem.metrics(u, nu))
    return row


def _snapshot(problem, rec, t, u, cfg, step, force=False):
    if problem.to_snapshot is None:
        return
    if rec.states and rec.states[-1][0] == t:
        return
    if force or (cfg.snapshot_every and step % cfg.snapshot_every == 0):
        rec.states.append((t, problem.to_snapshot(u)))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PersistenceVerdict:
    verdict: str
    sup_ratio: float
    duhamel_bound: float
    min_dt: float


def duhamel_bound(times, values, gamma):
    """``int_0^T (T - s)^-gamma v(s) ds`` with ``v`` piecewise constant on the record."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 2:
        return 0.0
    T = t[-1]
    lo, hi = T - t[:-1], T - t[1:]
    w = (lo ** (1.0 - gamma) - hi ** (1.0 - gamma)) / (1.0 - gamma)
    return float(np.sum(w * v[:-1]))


def blow_up_monitor(record, ratio_cap=1e6, gamma=0.0):
    """``GLOBAL_OK`` when the run finished and ``sup_t ||N(u)||_X / ||u||_Y <= ratio_cap``."""
    if not record.rows:
        raise ValueError("empty trajectory record")
    ratios = record.series("ratio")
    sup = float(np.max(ratios))
    norms = record.series("norm_y") if "norm_y" in record.rows[0] else np.ones_like(ratios)
    bound = duhamel_bound(record.times, ratios * norms, gamma)
    mdt = float(min(record.dts)) if record.dts else float("nan")
    if record.status == "blowup":
        verdict = "BLOWUP"
    elif record.status != "ok":
        verdict = "FAILED"
    elif sup > ratio_cap:
        verdict = "RATIO_UNBOUNDED"
    else:
        verdict = "GLOBAL_OK"
    return PersistenceVerdict(verdict, sup, bound, mdt)


def check_persistence(solve, T, cfg, ratio_cap=1e6):
    """Run to ``T`` and ``2T``; ``GLOBAL_OK`` needs both bounded and ``dt`` never halved.

    Returns ``(verdict, runs)`` with one ``(PersistenceVerdict, collapsed,
    record)`` triple per horizon.  The doubled run is skipped once the first
    one has not finished cleanly.
    """
    out = []
    for horizon in (T, 2.0 * T):
        rec = solve(horizon, cfg)
        v = blow_up_monitor(rec, ratio_cap)
        collapsed = bool(rec.dts) and min(rec.dts[:-1] or rec.dts) < cfg.dt * (1 - 1e-12)
        out.append((v, collapsed, rec))
        if v.verdict != "GLOBAL_OK":
            break
    ok = len(out) == 2 and all(v.verdict == "GLOBAL_OK" and not c for v, c, _ in out)
    return ("GLOBAL_OK" if ok else "NOT_GLOBAL"), out


# ---------------------------------------------------------------------------
# helpers shared by the concrete equations
# ---------------------------------------------------------------------------


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _lp_matrix(a, p, unit):
    sv = np.linalg.svd(a, compute_uv=False)
    if p == np.inf:
        return float(sv[0])
    return float((unit * np.sum(sv ** p)) ** (1.0 / p))


def _derivs(theta, a):
    op = NcOperator(a, theta)
    return partial_derivative(op, 1).entries, partial_derivative(op, 2).entries


# ---------------------------------------------------------------------------
# Allen-Cahn type: u' = Delta u + F(u)
# ---------------------------------------------------------------------------


def allen_cahn_problem(F, grid, n, part, route="calculus", besov=(), extra=None):
    """Symbol-route problem for ``u' = Delta u + F(u)``.

    The nonlinearity quantizes, applies ``F`` (functional calculus, or the
    Meyer decomposition with ``route="meyer"``), dequantizes and low-passes
    at ``S_{J_max}``.  ``extra`` replaces ``F(u)`` by an arbitrary matrix map.
    """
    from .doi import meyer_decompose

    low = part.low_table(part.J_max)
    theta = grid.theta
    unit = theta.trace_unit

    def to_op(f):
        return quantize(Symbol(f, grid), n, check=False)

    def nonlin(f):
        U = to_op(f)
        if extra is not None:
            V = extra(U)
        elif route == "meyer":
            V = meyer_decompose(F, Symbol(low * f, grid), part, n).total
        else:
            V = hermitian_calculus(F, NcOperator(_herm(U.entries), theta))
        g = dequantize(V, grid, check=False)
        return low * g.samples

    def l2(f):
        return Symbol(f, grid).l2_norm()

    def metrics(f, nf):
        U = to_op(f)
        row = {
            "l2": l2(f),
            "linf": _lp_matrix(U.entries, np.inf, unit),
            "hermitian_residual": hermitian_residual(U),
            "norm_y": l2(f),
        }
        for prm in besov:
            row[f"besov_{prm.s:g}_{prm.p:g}_{prm.q:g}"] = besov_norm(Symbol(f, grid), prm, part, n)
        return row

    return EvolutionProblem(
        linear=heat_linear_part(grid),
        nonlinearity=nonlin,
        norm_X=l2,
        norm_Y=l2,
        metrics=metrics,
        to_snapshot=lambda f: Symbol(f, grid),
        name="allen_cahn",
    )


def solve_allen_cahn(F, u0, T, cfg, part, n, route="calculus", besov=(), extra=None):
    """``u' = Delta u + F(u)`` from a Hermitian band-limited symbol ``u0``."""
    if u0.reflection_residual() > 1e-10:
        raise ValueError("u0 is not Hermitian (symbol fails the reflection test)")
    prob = allen_cahn_problem(F, u0.grid, n, part, route, besov, extra)
    return mild_solve(prob, u0.samples, T, cfg)


def jordan_derivative_term(theta, axis=1):
    """Matrix map ``u -> (u d_j u + (d_j u) u) / 2``."""

    def fn(U):
        d = partial_derivative(NcOperator(_herm(U.entries), theta), axis).entries
        a = _herm(U.entries)
        return NcOperator(0.5 * (a @ d + d @ a), theta)

    return fn


# ---------------------------------------------------------------------------
# NLS: i u' + Delta u = mu u |u|^{p-1}
# ---------------------------------------------------------------------------


def nls_flow(mu, p):
    """Exact flow of ``u' = -i mu u |u|^{p-1}``: ``u exp(-i mu h (u* u)^{(p-1)/2})``."""

    def flow(h, U):
        w, V = np.linalg.eigh(_herm(U.conj().T @ U))
        w = np.clip(w, 0.0, None)
        phase = np.exp(-1j * mu * h * w ** ((p - 1) / 2.0))
        return U @ ((V * phase) @ V.conj().T)

    return flow


def nls_problem(mu, p, theta, n, lap=None):
    if p < 3 or p % 2 != 1:
        raise ValueError(f"p must be an odd integer >= 3, got {p}")
    lap = lap or MatrixLaplacian(theta, n)
    unit = theta.trace_unit

    def nonlin(U):
        gram = U.conj().T @ U
        power = np.linalg.matrix_power(gram, (p - 1) // 2)
        return -1j * mu * (U @ power)

    def l2(U):
        return float(np.sqrt(unit) * np.linalg.norm(U))

    def metrics(U, nu):
        return {"l2": l2(U), "linf": _lp_matrix(U, np.inf, unit), "norm_y": l2(U)}

    return EvolutionProblem(
        linear=MatrixLinearPart(lap, schrodinger=True),
        nonlinearity=nonlin,
        norm_X=l2,
        norm_Y=l2,
        metrics=metrics,
        nonlinear_flow=nls_flow(mu, p),
        name="nls",
    )


def nls_ratio_bound(mu, p, l2_norm, theta):
    """``|mu| (det(2 pi theta)^{-1/4} ||u||_2)^{p-1}``: bounds ``||N(u)||_2 / ||u||_2`` along the flow."""
    return abs(mu) * (l2_norm / np.sqrt(theta.trace_unit)) ** (p - 1)


def solve_nls(mu, p, u0, T, cfg, theta=None, n=None):
    """Strang splitting for ``i u' + Delta u = mu u |u|^{p-1}`` on matrices.

    ``u0`` is an ``N x N`` array or :class:`NcOperator`.
    """
    if isinstance(u0, NcOperator):
        theta, n = u0.theta, u0.dim
        u0 = u0.entries
    if cfg.method != "strang":
        cfg = replace(cfg, method="strang")
    prob = nls_problem(mu, p, theta, n)
    return mild_solve(prob, u0, T, cfg)


# ---------------------------------------------------------------------------
# Navier-Stokes analogue: u' = Delta u - P X(u)
# ---------------------------------------------------------------------------


class MatrixLeray:
    """Orthogonal projection onto trace-free pairs with ``d_1 u_1 + d_2 u_2 = 0``.

    ``P u = u - div^*((-Delta_N)^+ div u)`` minus the identity components;
    ``div^* = -grad`` because the derivations are skew-adjoint.
    """

    def __init__(self, lap):
        self.lap = lap
        self.theta = lap.theta

    def divergence(self, u):
        d1 = partial_derivative(NcOperator(u[0], self.theta), 1).entries
        d2 = partial_derivative(NcOperator(u[1], self.theta), 2).entries
        return d1 + d2

    def __call__(self, u):
        q = self.lap.pseudo_inverse_neg(self.divergence(u))
        g1, g2 = _derivs(self.theta, q)
        out = np.stack([u[0] + g1, u[1] + g2])
        n = out.shape[-1]
        for c in out:
            c -= (np.trace(c) / n) * np.eye(n)
        return out


def jordan_advection(u, theta):
    """``X(u)_k = (1/2) sum_j (u_j d_j u_k + (d_j u_k) u_j)``."""
    d = [_derivs(theta, c) for c in u]
    out = np.zeros_like(u)
    for k in range(2):
        for j in range(2):
            djuk = d[k][j]
            out[k] += 0.5 * (u[j] @ djuk + djuk @ u[j])
    return out


def _pair_inner(a, b, unit):
    return complex(unit * sum(np.vdot(x, y) for x, y in zip(a, b)))


def navier_stokes_problem(theta, n, lap=None):
    lap = lap or MatrixLaplacian(theta, n)
    leray = MatrixLeray(lap)
    unit = theta.trace_unit

    def nonlin(u):
        return -leray(jordan_advection(u, theta))

    def l2(u):
        return float(np.sqrt(unit) * np.linalg.norm(u))

    def h1(u):
        g = [_derivs(theta, c) for c in u]
        grad = np.sqrt(sum(np.linalg.norm(x) ** 2 for pair in g for x in pair))
        return float(np.sqrt(l2(u) ** 2 + unit * grad ** 2))

    def metrics(u, px):
        nu, npx = l2(u), l2(px)
        ortho = abs(_pair_inner(px, u, unit).real)
        scale = nu * npx
        d1, d2 = _derivs(theta, u[0])[0], _derivs(theta, u[1])[1]
        gscale = np.linalg.norm(d1) + np.linalg.norm(d2)
        div = np.linalg.norm(d1 + d2) / gscale if gscale > 0 else 0.0
        return {
            "l2": nu,
            "energy": nu * nu,
            "norm_y": h1(u),
            "divergence_residual": float(div),
            "hermitian_residual": max(hermitian_residual(NcOperator(c, theta)) for c in u),
            "advection_orthogonality": ortho / scale if scale > 0 else 0.0,
        }

    return EvolutionProblem(
        linear=MatrixLinearPart(lap, hermitian=True),
        nonlinearity=nonlin,
        norm_X=l2,
        norm_Y=h1,
        smoothing_exponent=0.5,
        metrics=metrics,
        checks={"divergence_residual": 1e-8, "hermitian_residual": 1e-8},
        project=lambda u: np.stack([_herm(c) for c in leray(u)]),
        name="navier_stokes",
    ), leray


def prepare_navier_stokes_data(u0, n, theta=None):
    """Quantize a symbol pair (or take a matrix pair) and project it onto the matrix divergence-free space."""
    if isinstance(u0[0], Symbol):
        theta = u0[0].grid.theta
        mats = np.stack([_herm(quantize(c, n, check=False).entries) for c in u0])
    else:
        mats = np.stack([np.asarray(getattr(c, "entries", c), dtype=np.complex128) for c in u0])
    leray = MatrixLeray(MatrixLaplacian(theta, n))
    return np.stack([_herm(c) for c in leray(mats)])


def solve_navier_stokes(u0, T, cfg, theta, n=None):
    """``u' = Delta_N u - P X(u)`` for a Hermitian divergence-free matrix pair ``u0``."""
    u0 = np.asarray(u0, dtype=np.complex128)
    n = u0.shape[-1] if n is None else n
    prob, leray = navier_stokes_problem(theta, n)
    div = leray.divergence(u0)
    d1, d2 = _derivs(theta, u0[0])[0], _derivs(theta, u0[1])[1]
    scale = np.linalg.norm(d1) + np.linalg.norm(d2)
    if scale > 0 and np.linalg.norm(div) / scale > 1e-10:
        raise ValueError(f"u0 divergence residual {np.linalg.norm(div) / scale:.2e} exceeds 1e-10")
    for c in u0:
        if hermitian_residual(NcOperator(c, theta)) > 1e-10:
            raise ValueError("u0 components must be Hermitian")
    return mild_solve(prob, u0, T, cfg)


def heat_matrix(u, t, theta, n=None):
    """``exp(t Delta_N) u`` componentwise (reference solution for small data)."""
    u = np.asarray(u, dtype=np.complex128)
    n = u.shape[-1] if n is None else n
    lap = MatrixLaplacian(theta, n)
    if u.ndim == 3:
        return np.stack([lap.apply(np.exp, t, c) for c in u])
    return lap.apply(np.exp, t, u)


def heat_symbol(u0, t):
    """``exp(-t |xi|^2) f`` (closed form of the linear heat flow)."""
    return Symbol(heat_multiplier(u0.grid, t).values * u0.samples, u0.grid)


def symbol_linf(f, n):
    return float(singular_values(quantize(f, n, check=False))[0])
