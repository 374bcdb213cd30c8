"""Lindblad superoperators, their bi-orthonormal eigensystems and steady states."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import linalg as la
from .errors import (
    DefectiveSpectrum,
    Degenerate,
    DimensionError,
    EigensolverError,
    InternalConsistencyError,
    IterativeSolverError,
    NonUniqueSteadyState,
)

DEFECTIVE_COND = 1e10
DEGENERACY_TOL = 1e-8
ZERO_EIG_TOL = 1e-10
STEADY_RCOND_MIN = 1e-13


@dataclass(frozen=True)
class HilbertSpace:
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(x) for x in self.subsystem_dims)
        if not dims or any(x < 2 for x in dims):
            raise DimensionError(f"subsystem dimensions must all be >= 2, got {dims}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def liouville_dim(self) -> int:
        return self.dim**2


@dataclass
class LindbladSpec:
    """Hamiltonian (hbar = 1) plus ``(collapse_op, rate)`` channels."""

    hamiltonian: np.ndarray
    channels: list[tuple[np.ndarray, float]] = field(default_factory=list)


@dataclass(frozen=True)
class SuperOp:
    """Column-stacked matrix of a superoperator on ``hilbert``.

    ``matrix`` is normally a dense ndarray; a ``scipy.sparse`` matrix is
    accepted where only products with vectors are needed (large cutoffs).
    """

    matrix: np.ndarray
    hilbert: HilbertSpace

    @property
    def dim(self) -> int:
        return self.hilbert.dim

    def apply(self, rho) -> np.ndarray:
        d = self.dim
        return la.unvec(self.matrix @ la.vec(rho), d, d)

    def norm(self) -> float:
        if sp.issparse(self.matrix):
            return float(spla.norm(self.matrix))
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other: "SuperOp") -> "SuperOp":
        return SuperOp(self.matrix + other.matrix, self.hilbert)

    def scaled(self, factor) -> "SuperOp":
        return SuperOp(self.matrix * factor, self.hilbert)


@dataclass(frozen=True)
class EigenPair:
    value: complex
    right: np.ndarray
    left: np.ndarray


def _hilbert_for(d: int, hilbert: HilbertSpace | None) -> HilbertSpace:
    if hilbert is None:
        return HilbertSpace((d,))
    if hilbert.dim != d:
        raise DimensionError(f"operator dimension {d} does not match Hilbert space {hilbert.subsystem_dims}")
    return hilbert


def _eye(d, sparse):
    return sp.identity(d, dtype=np.complex128, format="csr") if sparse else np.eye(d, dtype=np.complex128)


def _kron(a, b, sparse):
    return sp.kron(a, b, format="csr") if sparse else np.kron(a, b)


def commutator_superop(h, hilbert: HilbertSpace | None = None, sparse: bool = False) -> SuperOp:
    """Matrix of rho -> -i[h, rho]."""
    h = sp.csr_matrix(h, dtype=np.complex128) if sparse else la.as_matrix(h)
    d = h.shape[0]
    if sparse:
        eye = _eye(d, sparse)
        mat = -1j * (_kron(eye, h, sparse) - _kron(h.T, eye, sparse))
        return SuperOp(mat, _hilbert_for(d, hilbert))
    mat = np.zeros((d * d, d * d), dtype=np.complex128)
    m4 = mat.reshape(d, d, d, d)
    idx = np.arange(d)
    m4[idx, :, idx, :] += -1j * h  # kron(1, h)
    m4[:, idx, :, idx] += 1j * h.T  # kron(h^T, 1)
    return SuperOp(mat, _hilbert_for(d, hilbert))


def dissipator_superop(c, hilbert: HilbertSpace | None = None, sparse: bool = False) -> SuperOp:
    """Matrix of D[c] rho = c rho c^H - (c^H c rho + rho c^H c)/2."""
    if sparse:
        c = sp.csr_matrix(c, dtype=np.complex128)
    else:
        c = la.as_matrix(c)
    if c.shape[0] != c.shape[1]:
        raise DimensionError(f"collapse operator must be square, got {c.shape}")
    d = c.shape[0]
    eye = _eye(d, sparse)
    cdc = c.conj().T @ c
    mat = _kron(c.conj(), c, sparse) - 0.5 * _kron(eye, cdc, sparse) - 0.5 * _kron(cdc.T, eye, sparse)
    return SuperOp(mat, _hilbert_for(d, hilbert))


def build_liouvillian(spec: LindbladSpec, hilbert: HilbertSpace | None = None, sparse: bool = False) -> SuperOp:
    """-i[H, .] + sum_k rate_k D[c_k] as a column-stacked matrix."""
    if sparse:
        h = sp.csr_matrix(spec.hamiltonian, dtype=np.complex128)
        defect = spla.norm(h - h.conj().T) / max(spla.norm(h), 1e-300)
        if defect > la.HERMITIAN_TOL:
            raise la.NotHermitianError(f"Hamiltonian is not Hermitian (defect {defect:.2e})")
    else:
        h = la.hermitize(spec.hamiltonian, what="Hamiltonian")
    d = h.shape[0]
    hilbert = _hilbert_for(d, hilbert)
    # L = 1 x A + conj(A) x 1 + sum_k rate_k conj(c_k) x c_k, A = -iH - K/2,
    # K = sum_k rate_k c_k^H c_k (two krons for all non-jump terms)
    damp = 0 * h
    jumps = []
    for op, rate in spec.channels:
        if rate < 0:
            raise ValueError(f"channel rates must be non-negative, got {rate}")
        if op.shape != (d, d):
            raise DimensionError(f"collapse operator shape {op.shape} does not match {d}x{d}")
        if rate:
            op = sp.csr_matrix(op, dtype=np.complex128) if sparse else np.asarray(op, dtype=np.complex128)
            damp = damp + rate * (op.conj().T @ op)
            jumps.append((op, rate))
    amat = -1j * h - 0.5 * damp
    if sparse:
        eye = _eye(d, sparse)
        mat = _kron(eye, amat, sparse) + _kron(amat.conj(), eye, sparse)
        for op, rate in jumps:
            mat = mat + rate * _kron(op.conj(), op, sparse)
        return SuperOp(mat, hilbert)
    mat = np.zeros((d * d, d * d), dtype=np.complex128)
    m4 = mat.reshape(d, d, d, d)
    idx = np.arange(d)
    m4[idx, :, idx, :] += amat  # kron(1, A)
    m4[:, idx, :, idx] += amat.conj()  # kron(conj(A), 1)
    for op, rate in jumps:
        k = sp.kron(sp.coo_matrix(op.conj()), sp.coo_matrix(op), format="coo")
        mat[k.row, k.col] += rate * k.data
    return SuperOp(mat, hilbert)


def trace_preservation_defect(sop: SuperOp) -> float:
    """max |vec(1)^H L| relative to max|L|."""
    d = sop.dim
    ident = la.vec(np.eye(d, dtype=np.complex128))
    row = sop.matrix.T @ ident.conj()  # = (vec(1)^H L)^T
    scale = abs(sop.matrix).max()
    return float(np.max(np.abs(row)) / scale) if scale else 0.0


def eig_biorthonormal(sop: SuperOp) -> list[EigenPair]:
    """All eigenpairs with lefts from the inverse right-eigenvector matrix.

    Sorted by descending real part, then ascending |Im|, then descending Im.
    When the leading eigenvalue is zero (to 1e-10 ||L||) its right
    eigenstate is returned Hermitized with unit trace.
    """
    mat = np.asarray(sop.matrix)
    d = sop.dim
    try:
        w, r = sla.eig(mat, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(str(exc)) from exc
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > DEFECTIVE_COND:
        raise DefectiveSpectrum(f"eigenvector matrix condition number {cond:.3e} exceeds {DEFECTIVE_COND:.0e}")
    rinv = np.linalg.inv(r)

    quantum = 1e-9 * max(float(np.max(np.abs(w))), 1e-300)
    key_re = np.round(w.real / quantum)
    key_abs_im = np.round(np.abs(w.imag) / quantum)
    key_im = np.round(w.imag / quantum)
    order = np.lexsort((-key_im, key_abs_im, -key_re))

    lnorm = np.linalg.norm(mat)
    pairs = []
    for rank, idx in enumerate(order):
        lam = complex(w[idx])
        right = la.unvec(r[:, idx], d, d)
        # row idx of R^-1 is vec(sigma)^H
        left = la.unvec(rinv[idx, :].conj(), d, d)
        if rank == 0 and abs(lam) <= ZERO_EIG_TOL * lnorm:
            tr = np.trace(right)
            right = right / tr
            right = 0.5 * (right + right.conj().T)
            left = left * np.conj(tr)
            lam = 0.0j
        pairs.append(EigenPair(lam, right, left))
    return pairs


def degenerate_with(pairs: Sequence[EigenPair], value: complex, scale: float) -> int:
    """Number of eigenvalues within DEGENERACY_TOL*scale of ``value``."""
    vals = np.array([p.value for p in pairs])
    return int(np.count_nonzero(np.abs(vals - value) < DEGENERACY_TOL * scale))


def spectral_gap(sop: SuperOp) -> float:
    """Minus the second-largest real part of the spectrum (dense eig)."""
    w = sla.eigvals(np.asarray(sop.matrix), check_finite=False)
    re = np.sort(w.real)[::-1]
    return float(-re[1])


def _finalize_steady(sop: SuperOp, x) -> np.ndarray:
    d = sop.dim
    rho = la.unvec(np.asarray(x).ravel(), d, d)
    rho = rho / np.trace(rho)
    defect = la.hermitian_defect(rho)
    if defect > 1e-8:
        raise InternalConsistencyError(f"steady state not Hermitian (defect {defect:.2e})")
    rho = 0.5 * (rho + rho.conj().T)
    resid = np.linalg.norm(sop.matrix @ la.vec(rho))
    if resid > 1e-10 * sop.norm():
        raise InternalConsistencyError(f"steady-state residual {resid:.2e} exceeds 1e-10 ||L||")
    return rho


def steady_state_exact(sop: SuperOp, check_gap: bool = False) -> np.ndarray:
    """Unit-trace ``rho`` with ``L rho = 0`` from the bordered system.

    Solves ``[[L, vec(1)], [vec(1)^H, 0]] [x; s] = [0; 1]``. The bordered
    matrix is singular exactly when the zero eigenvalue is not simple, which
    its reciprocal condition estimate detects. ``check_gap`` additionally
    demands a strictly negative second eigenvalue from a dense
    diagonalization.
    """
    d = sop.dim
    D = d * d
    ident = la.vec(np.eye(d, dtype=np.complex128))
    if sp.issparse(sop.matrix):
        col = sp.csr_matrix(ident.reshape(-1, 1))
        border = sp.bmat([[sop.matrix, col], [col.conj().T, None]], format="csc")
        rhs = np.zeros(D + 1, dtype=np.complex128)
        rhs[D] = 1.0
        try:
            x = spla.splu(border).solve(rhs)
        except RuntimeError as exc:
            raise NonUniqueSteadyState(f"bordered steady-state system is singular: {exc}") from exc
        return _finalize_steady(sop, x[:D])

    if check_gap:
        gap = spectral_gap(sop)
        if gap <= ZERO_EIG_TOL * sop.norm():
            raise NonUniqueSteadyState(f"spectral gap {gap:.3e} is not positive")
    border = np.zeros((D + 1, D + 1), dtype=np.complex128)
    border[:D, :D] = sop.matrix
    border[:D, D] = ident
    border[D, :D] = ident.conj()
    with warnings.catch_warnings():
        # an exactly singular border is reported through rcond below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(border, check_finite=False)
    rcond, _ = sla.lapack.zgecon(lu[0], np.linalg.norm(border, 1), norm="1")
    if not rcond > STEADY_RCOND_MIN:
        raise NonUniqueSteadyState(f"bordered steady-state system is singular (rcond {rcond:.2e})")
    rhs = np.zeros(D + 1, dtype=np.complex128)
    rhs[D] = 1.0
    x = sla.lu_solve(lu, rhs, check_finite=False)
    return _finalize_steady(sop, x[:D])


def steady_state_iterative(sop: SuperOp, l0: "KroneckerSumGenerator", rtol: float = 1e-13, maxiter: int = 50) -> np.ndarray:
    """Steady state of ``sop`` by GMRES, for generators too large for a dense LU.

    Writes ``rho = rho0 + delta`` with ``rho0`` the steady state of the
    Kronecker sum ``l0`` and solves ``L delta = -L rho0`` right
    preconditioned by ``l0^+``. The preconditioner only affects the
    iteration count; the result passes the same residual check as the
    direct solver. Uniqueness is not tested here.
    """
    d = sop.dim
    D = d * d
    mat = sop.matrix
    solver = l0.shifted_solver(0.0)
    x0 = la.vec(l0.steady_state())
    rhs = -(mat @ x0)
    op = spla.LinearOperator((D, D), matvec=lambda y: mat @ solver.solve(y), dtype=np.complex128)
    y, info = spla.gmres(op, rhs, rtol=rtol, atol=0.0, restart=200, maxiter=maxiter)
    if info != 0:
        resid = np.linalg.norm(op.matvec(y) - rhs) / max(np.linalg.norm(rhs), 1e-300)
        raise IterativeSolverError(f"GMRES stopped with info {info}, relative residual {resid:.2e}")
    return _finalize_steady(sop, x0 + solver.solve(y))


def expectation(rho, op) -> complex:
    """Tr(op rho)."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"shape mismatch: rho {rho.shape}, op {op.shape}")
    return complex(np.sum(op.T * rho))


# ---------------------------------------------------------------- Kronecker sums


def embed(op, dims: Sequence[int], site: int) -> np.ndarray:
    """Operator ``op`` acting on factor ``site`` of the tensor product ``dims``."""
    mats = [np.eye(n, dtype=np.complex128) for n in dims]
    mats[site] = np.asarray(op, dtype=np.complex128)
    return reduce(np.kron, mats)


def embed_sparse(op, dims: Sequence[int], site: int):
    mats = [sp.identity(n, dtype=np.complex128, format="csr") for n in dims]
    mats[site] = sp.csr_matrix(op, dtype=np.complex128)
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)


class KroneckerSumGenerator:
    """Generator ``sum_k 1 x .. x L_k x .. x 1`` of uncoupled subsystems.

    ``locals_`` are column-stacked local superoperator matrices of size
    ``dims[k]**2``. Products and the shifted pseudoinverse are evaluated with
    per-subsystem tensor contractions, never forming the full matrix.
    """

    def __init__(self, dims: Sequence[int], locals_: Sequence[np.ndarray]):
        self.dims = tuple(int(n) for n in dims)
        if len(locals_) != len(self.dims):
            raise DimensionError("need one local generator per subsystem")
        self.locals = [np.asarray(m, dtype=np.complex128) for m in locals_]
        for n, m in zip(self.dims, self.locals):
            if m.shape != (n * n, n * n):
                raise DimensionError(f"local generator shape {m.shape} does not match subsystem dim {n}")
        self.hilbert = HilbertSpace(self.dims)
        self._eig = None

    @property
    def dim(self) -> int:
        return self.hilbert.dim

    def _apply_local(self, t, k, mat):
        n = self.dims[k]
        nsub = len(self.dims)
        # mat[(c' n + r'), (c n + r)] -> T[c', r', c, r]
        t4 = mat.reshape(n, n, n, n)
        out = np.tensordot(t4, t, axes=([3, 2], [k, nsub + k]))
        # axes now (c', r', remaining...) -> put r' at k and c' at nsub + k
        return np.moveaxis(out, [1, 0], [k, nsub + k])

    def _tensor(self, rho):
        return np.asarray(rho, dtype=np.complex128).reshape(self.dims + self.dims)

    def apply(self, rho) -> np.ndarray:
        t = self._tensor(rho)
        out = np.zeros_like(t)
        for k, m in enumerate(self.locals):
            out += self._apply_local(t, k, m)
        return out.reshape(self.dim, self.dim)

    def to_superop(self) -> SuperOp:
        d = self.dim
        total = np.zeros((d * d, d * d), dtype=np.complex128)
        # the column-stacked vec of a product space is not a plain kron of
        # local vec spaces; assemble from the action on matrix units
        basis = np.eye(d * d, dtype=np.complex128)
        for col in range(d * d):
            total[:, col] = la.vec(self.apply(la.unvec(basis[:, col], d, d)))
        return SuperOp(total, self.hilbert)

    def _decompose(self):
        if self._eig is None:
            eigs = []
            for m in self.locals:
                w, v = np.linalg.eig(m)
                eigs.append((w, v, np.linalg.inv(v), np.linalg.cond(v)))
            self._eig = eigs
        return self._eig

    def local_condition(self) -> float:
        return max(c for _, _, _, c in self._decompose())

    def eigenvalue_tensor(self) -> np.ndarray:
        """Spectrum arranged like the density-matrix tensor (rows, cols)."""
        nsub = len(self.dims)
        total = np.zeros(self.dims + self.dims, dtype=np.complex128)
        for k, (w, _, _, _) in enumerate(self._decompose()):
            n = self.dims[k]
            wk = w.reshape(n, n).T  # index [r, c] for local vec position c n + r
            shape = [1] * (2 * nsub)
            shape[k] = n
            shape[nsub + k] = n
            total = total + wk.reshape(shape)
        return total

    def steady_state(self) -> np.ndarray:
        """Tensor product of the unit-trace local steady states."""
        factors = []
        for k, m in enumerate(self.locals):
            n = self.dims[k]
            loc = steady_state_exact(SuperOp(m, HilbertSpace((n,))))
            factors.append(loc)
        return reduce(np.kron, factors)

    def shifted_solver(self, shift: complex, tol: float = 1e-9) -> "KroneckerSumSolver":
        return KroneckerSumSolver(self, shift, tol)


class KroneckerSumSolver:
    """Moore-Penrose action of ``(G - shift)^+`` for a Kronecker-sum ``G``.

    A particular solution comes from the product eigenbasis; the
    Moore-Penrose solution is recovered by projecting the right-hand side
    onto the range and removing the component along the right null vector.
    """

    def __init__(self, gen: KroneckerSumGenerator, shift: complex, tol: float = 1e-9):
        self.gen = gen
        self.shift = complex(shift)
        decomp = gen._decompose()
        lam = gen.eigenvalue_tensor() - self.shift
        scale = max(float(np.max(np.abs(lam + self.shift))), 1e-300)
        zero = np.abs(lam) < DEGENERACY_TOL * scale
        nzero = int(np.count_nonzero(zero))
        if nzero != 1:
            raise Degenerate(f"shift {shift} matches {nzero} eigenvalues of the Kronecker sum")
        self._inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, lam))
        idx = np.argwhere(zero)[0]
        nsub = len(gen.dims)
        right_f, left_f = [], []
        for k, (w, v, vinv, _) in enumerate(decomp):
            n = gen.dims[k]
            pos = idx[nsub + k] * n + idx[k]
            right_f.append(la.unvec(v[:, pos], n, n))
            left_f.append(la.unvec(vinv[pos, :].conj(), n, n))
        self.right_null = reduce(np.kron, right_f)
        self.left_null = reduce(np.kron, left_f)
        self.tol = tol
        self.condition = gen.local_condition()

    def _transform(self, t, which):
        for k, (_, v, vinv, _) in enumerate(self.gen._decompose()):
            t = self.gen._apply_local(t, k, vinv if which == "in" else v)
        return t

    def solve_matrix(self, f) -> np.ndarray:
        d = self.gen.dim
        f = np.asarray(f, dtype=np.complex128).reshape(d, d)
        m = self.left_null
        f = f - m * (la.hs_inner(m, f) / la.hs_inner(m, m))
        t = self._transform(self.gen._tensor(f), "in")
        t = t * self._inv
        y = self._transform(t, "out").reshape(d, d)
        n = self.right_null
        return y - n * (la.hs_inner(n, y) / la.hs_inner(n, n))

    def solve(self, f_vec) -> np.ndarray:
        d = self.gen.dim
        return la.vec(self.solve_matrix(la.unvec(np.asarray(f_vec), d, d)))

    def residual(self, f, x) -> float:
        """Relative residual of (G - shift) x = P_range f."""
        d = self.gen.dim
        f = np.asarray(f).reshape(d, d)
        m = self.left_null
        fp = f - m * (la.hs_inner(m, f) / la.hs_inner(m, m))
        ax = self.gen.apply(x) - self.shift * x
        nf = np.linalg.norm(fp)
        return float(np.linalg.norm(ax - fp) / nf) if nf > 0 else float(np.linalg.norm(ax))
