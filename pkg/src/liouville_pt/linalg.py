"""Dense complex linear algebra used by the perturbation engines.

Matrices are plain ``numpy.ndarray`` of dtype complex128. Vectorization
is column-stacking throughout: ``vec(a)[j*rows + i] == a[i, j]``, so
``vec(x @ y @ z) == kron(z.T, x) @ vec(y)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionError,
    EigensolverError,
    LiouvillePTError,
    NotHermitianError,
    NotPositiveDefinite,
    PinvConvergenceError,
)

DEFAULT_REL_TOL = 1e-12
HERMITIAN_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Validate and convert to a finite 2-D complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LiouvillePTError("matrix has non-finite entries")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def vec(a) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise DimensionError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product Tr(x^H y)."""
    return complex(np.vdot(np.asarray(x).ravel(order="F"), np.asarray(y).ravel(order="F")))


def hermitian_defect(a) -> float:
    """max|a - a^H| relative to max|a| (0 for the zero matrix)."""
    a = np.asarray(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)) / scale)


def hermitize(a, tol: float = HERMITIAN_TOL, what: str = "matrix") -> np.ndarray:
    """Symmetrize ``a`` after checking it is Hermitian to ``tol`` (relative)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} is not square: {a.shape}")
    defect = hermitian_defect(a)
    if defect > tol:
        raise NotHermitianError(f"{what} is not Hermitian (relative defect {defect:.3e} > {tol:.1e})")
    return 0.5 * (a + a.conj().T)


def trace_norm(a) -> float:
    """Sum of singular values; uses eigvalsh when ``a`` is Hermitian."""
    a = np.asarray(a, dtype=np.complex128)
    if a.shape[0] == a.shape[1] and hermitian_defect(a) < 1e-13:
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T)))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


@dataclass(frozen=True)
class Pinv:
    """Moore-Penrose pseudoinverse together with the rank it retained.

    ``singular_tol`` is the absolute cutoff actually applied
    (``rel_tol * sigma_max``).
    """

    matrix: np.ndarray
    rank: int
    singular_tol: float


def pinv(a, rel_tol: float = DEFAULT_REL_TOL) -> Pinv:
    """Pseudoinverse ``V D^+ U^H`` from the SVD ``a = U D V^H``.

    Singular values at or below ``rel_tol * sigma_max`` are treated as zero.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    a = as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise PinvConvergenceError(str(exc)) from exc
    smax = s[0] if s.size else 0.0
    cutoff = rel_tol * smax
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    mat = (vh.conj().T * s_inv) @ u.conj().T
    return Pinv(matrix=mat, rank=rank, singular_tol=float(cutoff))


def penrose_residuals(a, a_pinv) -> tuple[float, float, float, float]:
    """Relative residuals of the four Penrose conditions.

    Each residual is a Frobenius norm divided by the norm of the quantity it
    should reproduce (``a``, ``a_pinv``, ``a a_pinv``, ``a_pinv a``).
    """
    a = np.asarray(a)
    p = np.asarray(a_pinv)
    ap = a @ p
    pa = p @ a

    def rel(x, ref):
        n = np.linalg.norm(ref)
        return float(np.linalg.norm(x) / n) if n > 0 else float(np.linalg.norm(x))

    return (
        rel(ap @ a - a, a),
        rel(pa @ p - p, p),
        rel(ap.conj().T - ap, ap),
        rel(pa.conj().T - pa, pa),
    )


def range_projector(a, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Orthogonal projector onto range(a) built from left singular vectors."""
    u, s, _ = np.linalg.svd(as_matrix(a), full_matrices=False)
    k = int(np.count_nonzero(s > rel_tol * s[0])) if s.size else 0
    uk = u[:, :k]
    return uk @ uk.conj().T


def cholesky_lower(a) -> np.ndarray:
    """Lower-triangular ``L`` with positive real diagonal and ``L L^H = a``.

    Raises :class:`NotPositiveDefinite` on a non-positive (or numerically
    zero) pivot.
    """
    a = hermitize(a, what="Cholesky input")
    d = a.shape[0]
    try:
        low = sla.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    piv = np.real(np.diag(low)) ** 2
    floor = d * np.finfo(float).eps * max(np.max(np.abs(a)), np.finfo(float).tiny)
    if np.any(piv <= floor):
        k = int(np.argmin(piv))
        raise NotPositiveDefinite(f"pivot {k} is {piv[k]:.3e}, at or below roundoff floor {floor:.1e}")
    return np.tril(low)


def min_eigenvalue_hermitian(a) -> float:
    a = np.asarray(a, dtype=np.complex128)
    try:
        w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    return float(w[0])


class CorankOneSolver:
    """Action of the Moore-Penrose pseudoinverse of a square matrix with 1-D null space.

    ``A^+ f`` is the minimum-norm least-squares solution: project ``f`` onto
    range(A) (orthogonal to the left null vector ``m``), solve the bordered
    system ``[[A, u], [n^H, 0]]`` with ``u = m``, which returns the unique
    solution orthogonal to the right null vector ``n``. This equals
    ``pinv(A) @ f`` exactly while needing one LU instead of one SVD.
    """

    def __init__(self, a, right_null, left_null):
        a = np.asarray(a, dtype=np.complex128)
        dim = a.shape[0]
        self.right_null = np.asarray(right_null, dtype=np.complex128).ravel()
        self.left_null = np.asarray(left_null, dtype=np.complex128).ravel()
        self.right_null = self.right_null / np.linalg.norm(self.right_null)
        self.left_null = self.left_null / np.linalg.norm(self.left_null)
        border = np.empty((dim + 1, dim + 1), dtype=np.complex128)
        border[:dim, :dim] = a
        border[:dim, dim] = self.left_null
        border[dim, :dim] = self.right_null.conj()
        border[dim, dim] = 0.0
        self._lu = sla.lu_factor(border, check_finite=False)
        anorm = np.linalg.norm(border, 1)
        (rcond, info) = sla.lapack.zgecon(self._lu[0], anorm, norm="1")
        self.rcond = float(rcond)
        self.dim = dim

    def solve(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=np.complex128).ravel()
        f = f - self.left_null * np.vdot(self.left_null, f)
        rhs = np.append(f, 0.0)
        x = sla.lu_solve(self._lu, rhs, check_finite=False)[: self.dim]
        # the border forces n^H x = 0; remove residual roundoff along n
        return x - self.right_null * np.vdot(self.right_null, x)
