"""Loop kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``LIOUVILLE_PT_DISABLE_NUMBA``
is unset (or "0"). Both paths are always importable as ``*_numba`` /
``*_numpy`` so tests and ``benchmarks/bench_kernels.py`` can compare them.

Coordinate layout ("lower coordinates") for a d x d matrix, d**2 reals:
the d real diagonal entries first, then for each strictly-lower entry
(p, q), p > q, in row-major order (m = p(p-1)/2 + q), the pair
(Re, Im) at positions d + 2m, d + 2m + 1. The same layout describes
lower-triangular matrices with real diagonal and Hermitian matrices.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("LIOUVILLE_PT_DISABLE_NUMBA", "0").lower() in ("", "0", "false", "no")


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def pack_lower_numba(a):
    d = a.shape[0]
    x = np.empty(d * d)
    for i in range(d):
        x[i] = a[i, i].real
    m = 0
    for p in range(1, d):
        for q in range(p):
            x[d + 2 * m] = a[p, q].real
            x[d + 2 * m + 1] = a[p, q].imag
            m += 1
    return x


@njit(cache=True)
def unpack_lower_numba(x, d):
    a = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        a[i, i] = x[i]
    m = 0
    for p in range(1, d):
        for q in range(p):
            a[p, q] = x[d + 2 * m] + 1j * x[d + 2 * m + 1]
            m += 1
    return a


@njit(cache=True)
def _put(out, col, d, p, q, val):
    # accumulate val into the lower coordinate of entry (p, q), p >= q
    if p == q:
        out[p, col] += val.real
    else:
        m = p * (p - 1) // 2 + q
        out[d + 2 * m, col] += val.real
        out[d + 2 * m + 1, col] += val.imag


@njit(cache=True)
def z0_matrix_numba(zeta):
    """Real matrix of X -> zeta X^H + X zeta^H in lower coordinates."""
    d = zeta.shape[0]
    n = d * d
    out = np.zeros((n, n))
    for k in range(n):
        if k < d:
            i = k
            j = k
            s = 1.0 + 0.0j
        else:
            m = (k - d) // 2
            # invert m = i(i-1)/2 + j
            i = int((1.0 + np.sqrt(1.0 + 8.0 * m)) / 2.0)
            while i * (i - 1) // 2 > m:
                i -= 1
            while (i + 1) * i // 2 <= m:
                i += 1
            j = m - i * (i - 1) // 2
            s = 1.0 + 0.0j if (k - d) % 2 == 0 else 1j
        cs = np.conj(s)
        # H1[p, i] = conj(s) zeta[p, j]; H = H1 + H1^H
        for p in range(i, d):
            v = cs * zeta[p, j]
            if p == i:
                v = v + np.conj(v)
            _put(out, k, d, p, i, v)
        for q in range(i):
            _put(out, k, d, i, q, s * np.conj(zeta[q, j]))
    return out


# ---------------------------------------------------------------- numpy path


def _off_index(d):
    return np.tril_indices(d, -1)


def pack_lower_numpy(a):
    d = a.shape[0]
    rows, cols = _off_index(d)
    off = a[rows, cols]
    x = np.empty(d * d)
    x[:d] = np.real(np.diag(a))
    x[d::2] = off.real
    x[d + 1::2] = off.imag
    return x


def unpack_lower_numpy(x, d):
    a = np.zeros((d, d), dtype=np.complex128)
    rows, cols = _off_index(d)
    a[np.arange(d), np.arange(d)] = x[:d]
    a[rows, cols] = x[d::2] + 1j * x[d + 1::2]
    return a


def z0_matrix_numpy(zeta):
    """Column-by-column assembly using whole-matrix numpy products."""
    d = zeta.shape[0]
    n = d * d
    out = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        x = unpack_lower_numpy(e, d)
        h = zeta @ x.conj().T
        out[:, k] = pack_lower_numpy(h + h.conj().T)
    return out


# ---------------------------------------------------------------- dispatch


def pack_lower(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    return pack_lower_numba(a) if USE_NUMBA else pack_lower_numpy(a)


def unpack_lower(x, d):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return unpack_lower_numba(x, d) if USE_NUMBA else unpack_lower_numpy(x, d)


def unpack_hermitian(x, d):
    a = unpack_lower(x, d)
    return a + np.tril(a, -1).conj().T


def z0_matrix(zeta):
    zeta = np.ascontiguousarray(zeta, dtype=np.complex128)
    return z0_matrix_numba(zeta) if USE_NUMBA else z0_matrix_numpy(zeta)
