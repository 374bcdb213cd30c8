"""Density-matrix perturbation theory for Lindblad generators.

With ``L = L0 + alpha L1`` and a non-degenerate eigenpair of ``L0``, the
corrections obey

    lam_j = <s0, L1 r_{j-1}> - sum_{k=1}^{j-1} lam_k <s0, r_{j-k}>
    r_j   = (L0 - lam_0)^+ (-L1 r_{j-1} + sum_{k=1}^{j} lam_k r_{j-k})

where ``^+`` is the Moore-Penrose pseudoinverse. For the steady state
(``s0`` = identity) every ``lam_j`` vanishes and ``r_j = -L0^+ L1 r_{j-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import (
    Degenerate,
    DimensionError,
    InternalConsistencyError,
    NormalizationFailure,
    SolvabilityViolation,
)
from .liouville import (
    EigenPair,
    KroneckerSumGenerator,
    SuperOp,
    degenerate_with,
    eig_biorthonormal,
    steady_state_exact,
    trace_preservation_defect,
)

SOLVABILITY_TOL = 1e-8
HERMITIAN_TOL = 1e-10
TRACE_PRESERVATION_TOL = 1e-10
SVD_MAX_DIM = 1024
LOCAL_MAX_COND = 1e8
POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class PTSplit:
    """``L = l0 + alpha * l1``.

    ``l0_local``, when given, is the same ``l0`` as a Kronecker sum of
    uncoupled subsystem generators; it enables the fast pseudoinverse.
    """

    l0: SuperOp
    l1: SuperOp
    alpha: float = 1.0
    l0_local: KroneckerSumGenerator | None = None

    def __post_init__(self):
        if self.l0.dim != self.l1.dim:
            raise DimensionError("l0 and l1 act on different spaces")
        for name, sop in (("l0", self.l0), ("l1", self.l1)):
            defect = trace_preservation_defect(sop)
            if defect > TRACE_PRESERVATION_TOL:
                raise InternalConsistencyError(f"{name} is not trace preserving (defect {defect:.2e})")

    @property
    def dim(self) -> int:
        return self.l0.dim

    def full(self, alpha: float | None = None) -> SuperOp:
        a = self.alpha if alpha is None else alpha
        return SuperOp(self.l0.matrix + a * self.l1.matrix, self.l0.hilbert)


@dataclass
class PTSeries:
    mu_label: int
    alpha: float
    order: int
    eigvalue_corrections: list[complex]
    state_corrections: list[np.ndarray]
    solvability: list[float] = field(default_factory=list)
    method: str = ""

    def partial_eigenvalue(self, alpha: float | None = None, order: int | None = None) -> complex:
        a = self.alpha if alpha is None else alpha
        m = self.order if order is None else order
        return complex(sum(a**j * lam for j, lam in enumerate(self.eigvalue_corrections[: m + 1])))

    def partial_state(self, alpha: float | None = None, order: int | None = None) -> np.ndarray:
        a = self.alpha if alpha is None else alpha
        m = self.order if order is None else order
        return sum(a**j * r for j, r in enumerate(self.state_corrections[: m + 1]))


class _SvdSolver:
    method = "svd"

    def __init__(self, a):
        self.pinv = la.pinv(a)

    def solve(self, f):
        return self.pinv.matrix @ f


class _BorderedSolver:
    method = "bordered"

    def __init__(self, a, right0, left0):
        self.inner = la.CorankOneSolver(a, la.vec(right0), la.vec(left0))

    def solve(self, f):
        return self.inner.solve(f)


class _LocalSolver:
    method = "local"

    def __init__(self, gen: KroneckerSumGenerator, shift):
        self.inner = gen.shifted_solver(shift)

    def solve(self, f):
        return self.inner.solve(f)


def shifted_pinv(split: PTSplit, shift: complex, right0, left0, method: str = "auto"):
    """Solver applying ``(L0 - shift)^+`` to column-stacked vectors.

    ``method`` is one of ``svd`` (explicit SVD pseudoinverse), ``bordered``
    (one LU of the bordered matrix), ``local`` (Kronecker-sum eigenbasis) or
    ``auto``: svd up to Liouville dimension 1024, then local when available
    and well conditioned, else bordered. All three return the same
    Moore-Penrose solution when the null space is one dimensional.
    """
    D = split.dim**2
    if method == "auto":
        if D <= SVD_MAX_DIM:
            method = "svd"
        elif split.l0_local is not None and split.l0_local.local_condition() <= LOCAL_MAX_COND:
            method = "local"
        else:
            method = "bordered"
    if method == "local":
        if split.l0_local is None:
            raise ValueError("local solver requested but the split has no Kronecker-sum form")
        return _LocalSolver(split.l0_local, shift)
    a = np.asarray(split.l0.matrix.toarray() if hasattr(split.l0.matrix, "toarray") else split.l0.matrix)
    a = a - shift * np.eye(D)
    if method == "svd":
        return _SvdSolver(a)
    if method == "bordered":
        return _BorderedSolver(a, right0, left0)
    raise ValueError(f"unknown pseudoinverse method {method!r}")


def _check_solvable(left0, f, j) -> float:
    lnorm = np.linalg.norm(left0)
    fnorm = np.linalg.norm(f)
    if fnorm == 0.0:
        return 0.0
    resid = abs(la.hs_inner(left0, f)) / (lnorm * fnorm)
    if resid > SOLVABILITY_TOL:
        raise SolvabilityViolation(f"order {j}: |<s0, f_j>| / (|s0||f_j|) = {resid:.3e} > {SOLVABILITY_TOL:.0e}")
    return float(resid)


def pt_eigenpair(
    split: PTSplit,
    seed: EigenPair,
    order: int,
    spectrum: list[EigenPair] | None = None,
    solver=None,
    mu_label: int = 0,
    method: str = "auto",
) -> PTSeries:
    """Eigenvalue and right-eigenstate corrections through ``order``.

    ``seed`` must be a bi-orthonormal eigenpair of ``split.l0``; the
    non-degeneracy gate uses ``spectrum`` (the full ``l0`` eigensystem,
    computed if omitted).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    d = split.dim
    scale = split.l0.norm()
    if spectrum is None:
        spectrum = eig_biorthonormal(split.l0)
    if degenerate_with(spectrum, seed.value, scale) != 1:
        raise Degenerate(f"seed eigenvalue {seed.value} is degenerate in the unperturbed spectrum")
    if solver is None:
        solver = shifted_pinv(split, seed.value, seed.right, seed.left, method)

    left0 = seed.left
    rhos = [np.asarray(seed.right, dtype=np.complex128)]
    lams = [complex(seed.value)]
    solv = []
    for j in range(1, order + 1):
        l1r = split.l1.apply(rhos[j - 1])
        lam = la.hs_inner(left0, l1r) - sum(lams[k] * la.hs_inner(left0, rhos[j - k]) for k in range(1, j))
        lams.append(complex(lam))
        f = -l1r + sum(lams[k] * rhos[j - k] for k in range(1, j + 1))
        solv.append(_check_solvable(left0, f, j))
        rhos.append(la.unvec(solver.solve(la.vec(f)), d, d))
    return PTSeries(mu_label, split.alpha, order, lams, rhos, solv, getattr(solver, "method", ""))


def unperturbed_steady_state(split: PTSplit) -> np.ndarray:
    if split.l0_local is not None:
        return split.l0_local.steady_state()
    return steady_state_exact(split.l0)


def pt_steady_state(split: PTSplit, order: int, rho0=None, solver=None, method: str = "auto") -> PTSeries:
    """Steady-state corrections ``r_j = -L0^+ L1 r_{j-1}``.

    The eigenvalue corrections are evaluated with the general formula and
    asserted to vanish; they are stored as exact zeros.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    d = split.dim
    if rho0 is None:
        rho0 = unperturbed_steady_state(split)
    rho0 = np.asarray(rho0, dtype=np.complex128)
    ident = np.eye(d, dtype=np.complex128)
    if solver is None:
        solver = shifted_pinv(split, 0.0, rho0, ident, method)

    rhos = [rho0]
    solv = []
    for j in range(1, order + 1):
        l1r = split.l1.apply(rhos[j - 1])
        lam = la.hs_inner(ident, l1r)
        if abs(lam) > 1e-10 * max(np.linalg.norm(l1r), 1e-300) * np.sqrt(d):
            raise InternalConsistencyError(f"order {j}: steady-state eigenvalue correction {lam:.3e} is not zero")
        f = -l1r
        solv.append(_check_solvable(ident, f, j))
        r = la.unvec(solver.solve(la.vec(f)), d, d)
        defect = la.hermitian_defect(r)
        if defect > HERMITIAN_TOL:
            raise InternalConsistencyError(f"order {j}: steady-state correction not Hermitian ({defect:.2e})")
        rhos.append(0.5 * (r + r.conj().T))
    return PTSeries(0, split.alpha, order, [0j] * (order + 1), rhos, solv, getattr(solver, "method", ""))


def assemble_truncated(series: PTSeries, alpha: float | None = None, order: int | None = None) -> np.ndarray:
    """N[sum_{j<=M} alpha^j r_j] with N[A] = A / Tr A, Hermitized."""
    acc = series.partial_state(alpha, order)
    tr = np.trace(acc)
    if abs(tr) <= 1e-14 * max(np.max(np.abs(acc)), 1e-300):
        raise NormalizationFailure(f"truncated series has vanishing trace ({tr:.3e})")
    out = acc / tr
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class PositivityReport:
    min_eig: float
    positive: bool


def positivity_report(rho) -> PositivityReport:
    w = la.min_eigenvalue_hermitian(rho)
    return PositivityReport(w, w >= -POSITIVITY_TOL)
