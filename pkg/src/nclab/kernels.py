"""Hot loops, each in a numba and a pure-numpy flavour.

Every public function takes ``backend=None`` and dispatches through
:func:`nclab._accel.resolve_backend`.  Both flavours compute the same
quantity; the tests check them against each other.
"""

import math

import numpy as np
from scipy.special import gammaln

from ._accel import njit, resolve_backend

# ---------------------------------------------------------------------------
# radial factors of the displacement matrix
#
# <m|D(alpha)|n> = exp(i (m-n) arg alpha) * R[m, n](|alpha|), with
# R[n+k, n](r) = sqrt(n!/(n+k)!) r^k exp(-r^2/2) L_n^(k)(r^2) for k >= 0 and
# R[n, n+k] = (-1)^k R[n+k, n].  The normalized Laguerre functions are run
# forward in n with the three-term recurrence.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _radial_table_nb(radii, n):
    nr = radii.shape[0]
    out = np.zeros((n, n, nr))
    for p in range(nr):
        r = radii[p]
        x = r * r
        for k in range(n):
            if r == 0.0:
                f0 = 1.0 if k == 0 else 0.0
            else:
                f0 = math.exp(k * math.log(r) - 0.5 * x - 0.5 * math.lgamma(k + 1.0))
            out[k, 0, p] = f0
            if k > 0:
                out[0, k, p] = f0 if k % 2 == 0 else -f0
            if k + 1 >= n:
                continue
            f1 = (1.0 + k - x) * f0 / math.sqrt(k + 1.0)
            out[k + 1, 1, p] = f1
            if k > 0:
                out[1, k + 1, p] = f1 if k % 2 == 0 else -f1
            fm, fc = f0, f1
            for j in range(1, n - k - 1):
                fn = ((2.0 * j + 1.0 + k - x) * fc - math.sqrt(j * (j + k)) * fm) / math.sqrt(
                    (j + 1.0) * (j + k + 1.0)
                )
                out[j + k + 1, j + 1, p] = fn
                if k > 0:
                    out[j + 1, j + k + 1, p] = fn if k % 2 == 0 else -fn
                fm, fc = fc, fn
    return out


def _radial_table_np(radii, n):
    radii = np.asarray(radii, dtype=float)
    nr = radii.shape[0]
    out = np.zeros((n, n, nr))
    x = radii * radii
    with np.errstate(divide="ignore"):
        logr = np.log(radii)
    for k in range(n):
        if k == 0:
            f0 = np.exp(-0.5 * x)
        else:
            f0 = np.where(radii > 0, np.exp(k * logr - 0.5 * x - 0.5 * gammaln(k + 1.0)), 0.0)
        sign = -1.0 if k % 2 else 1.0
        out[k, 0] = f0
        if k > 0:
            out[0, k] = sign * f0
        if k + 1 >= n:
            continue
        f1 = (1.0 + k - x) * f0 / math.sqrt(k + 1.0)
        out[k + 1, 1] = f1
        if k > 0:
            out[1, k + 1] = sign * f1
        fm, fc = f0, f1
        for j in range(1, n - k - 1):
            fn = ((2.0 * j + 1.0 + k - x) * fc - math.sqrt(j * (j + k)) * fm) / math.sqrt(
                (j + 1.0) * (j + k + 1.0)
            )
            out[j + k + 1, j + 1] = fn
            if k > 0:
                out[j + 1, j + k + 1] = sign * fn
            fm, fc = fc, fn
    return out


def radial_table(radii, n, backend=None):
    """Radial factors ``R[m, n, p]`` of the displacement matrix at ``radii[p]``."""
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _radial_table_nb(radii, int(n))
    return _radial_table_np(radii, int(n))


# ---------------------------------------------------------------------------
# diagonal contractions used by quantize / dequantize
#   assemble:  U[m, n]  = sum_p R[m, n, p] * F[m - n + N - 1, p]
#   project:   H[k, p]  = sum_{m - n = k - N + 1} R[m, n, p] * U[m, n]
# ---------------------------------------------------------------------------


@njit(cache=True)
def _assemble_nb(table, fk):
    n = table.shape[0]
    nr = table.shape[2]
    out = np.zeros((n, n), dtype=np.complex128)
    for m in range(n):
        for q in range(n):
            row = fk[m - q + n - 1]
            acc = 0.0 + 0.0j
            for p in range(nr):
                acc += table[m, q, p] * row[p]
            out[m, q] = acc
    return out


def _assemble_np(table, fk):
    n = table.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(-(n - 1), n):
        idx = np.arange(max(0, -k), min(n, n - k))
        rows, cols = idx + k, idx
        out[rows, cols] = table[rows, cols, :] @ fk[k + n - 1]
    return out


def assemble(table, fk, backend=None):
    table = np.ascontiguousarray(table, dtype=np.float64)
    fk = np.ascontiguousarray(fk, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _assemble_nb(table, fk)
    return _assemble_np(table, fk)


@njit(cache=True)
def _project_nb(table, u):
    n = table.shape[0]
    nr = table.shape[2]
    out = np.zeros((2 * n - 1, nr), dtype=np.complex128)
    for m in range(n):
        for q in range(n):
            c = u[m, q]
            if c == 0:
                continue
            row = m - q + n - 1
            for p in range(nr):
                out[row, p] += table[m, q, p] * c
    return out


def _project_np(table, u):
    n = table.shape[0]
    out = np.zeros((2 * n - 1, table.shape[2]), dtype=np.complex128)
    for k in range(-(n - 1), n):
        idx = np.arange(max(0, -k), min(n, n - k))
        rows, cols = idx + k, idx
        out[k + n - 1] = u[rows, cols] @ table[rows, cols, :]
    return out


def project(table, u, backend=None):
    table = np.ascontiguousarray(table, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _project_nb(table, u)
    return _project_np(table, u)


# ---------------------------------------------------------------------------
# twisted convolution on the symmetric integer grid
#   out[r] = sum_s f[s] g[r - s] phase[s2*r1 - s1*r2 + offset]
# with grid index i <-> integer coordinate i - M/2.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _twisted_nb(f, g, phase, offset):
    m = f.shape[0]
    half = m // 2
    out = np.zeros((m, m), dtype=np.complex128)
    for a1 in range(m):
        for a2 in range(m):
            fs = f[a1, a2]
            if fs == 0:
                continue
            s1 = a1 - half
            s2 = a2 - half
            for b1 in range(m):
                c1 = b1 - a1 + half
                if c1 < 0 or c1 >= m:
                    continue
                r1 = b1 - half
                for b2 in range(m):
                    c2 = b2 - a2 + half
                    if c2 < 0 or c2 >= m:
                        continue
                    gv = g[c1, c2]
                    if gv == 0:
                        continue
                    r2 = b2 - half
                    out[b1, b2] += fs * gv * phase[s2 * r1 - s1 * r2 + offset]
    return out


def _twisted_np(f, g, phase, offset):
    m = f.shape[0]
    half = m // 2
    out = np.zeros((m, m), dtype=np.complex128)
    r1 = (np.arange(m) - half)[:, None]
    r2 = (np.arange(m) - half)[None, :]
    for a1, a2 in zip(*np.nonzero(f)):
        s1, s2 = a1 - half, a2 - half
        lo1, hi1 = max(0, a1 - half), min(m, a1 + half)
        lo2, hi2 = max(0, a2 - half), min(m, a2 + half)
        if lo1 >= hi1 or lo2 >= hi2:
            continue
        gs = g[lo1 - a1 + half:hi1 - a1 + half, lo2 - a2 + half:hi2 - a2 + half]
        ph = phase[s2 * r1[lo1:hi1] - s1 * r2[:, lo2:hi2] + offset]
        out[lo1:hi1, lo2:hi2] += f[a1, a2] * gs * ph
    return out


def twisted_sum(f, g, phase, offset, backend=None):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    phase = np.ascontiguousarray(phase, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _twisted_nb(f, g, phase, int(offset))
    return _twisted_np(f, g, phase, int(offset))


# ---------------------------------------------------------------------------
# double operator integral kernel in joint eigenbases
#   K[i, j] = sum_w weight[w] exp(i a[w] lam[i]) exp(i b[w] mu[j])
# ---------------------------------------------------------------------------


@njit(cache=True)
def _doi_kernel_nb(lam, mu, a, b, w, chunk=512):
    n1 = lam.shape[0]
    n2 = mu.shape[0]
    nw = a.shape[0]
    out = np.zeros((n1, n2), dtype=np.complex128)
    for s in range(0, nw, chunk):
        c = min(chunk, nw - s)
        left = np.empty((n1, c), dtype=np.complex128)
        right = np.empty((c, n2), dtype=np.complex128)
        for i in range(n1):
            for q in range(c):
                x = a[s + q] * lam[i]
                left[i, q] = w[s + q] * complex(math.cos(x), math.sin(x))
        for q in range(c):
            for j in range(n2):
                x = b[s + q] * mu[j]
                right[q, j] = complex(math.cos(x), math.sin(x))
        # the contraction itself is a dense product; leave it to BLAS
        out += np.dot(left, right)
    return out


def _doi_kernel_np(lam, mu, a, b, w, chunk=4096):
    out = np.zeros((lam.shape[0], mu.shape[0]), dtype=np.complex128)
    for s in range(0, a.shape[0], chunk):
        sl = slice(s, s + chunk)
        left = np.exp(1j * np.outer(lam, a[sl])) * w[sl]
        right = np.exp(1j * np.outer(b[sl], mu))
        out += left @ right
    return out


def doi_kernel(lam, mu, a, b, w, backend=None):
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _doi_kernel_nb(lam, mu, a, b, w)
    return _doi_kernel_np(lam, mu, a, b, w)
