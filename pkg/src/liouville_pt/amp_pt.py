"""Amplitude-matrix perturbation theory.

The steady state is written ``rho = zeta zeta^H`` with ``zeta`` lower
triangular. Order by order,

    zeta_0 zeta_0^H = rho_0 (+ c 1)
    Z0 zeta_j = rho_j - sum_{k=1}^{j-1} zeta_k zeta_{j-k}^H,
    Z0 X = zeta_0 X^H + X zeta_0^H,

and the truncated amplitude gives ``N[zeta~ zeta~^H]``, which is positive
semidefinite by construction.

``Z0`` conjugates its argument, so it is only real-linear. Restricting
every ``zeta_j`` to a real diagonal makes it a square d**2 x d**2 real
system (see :mod:`liouville_pt._kernels` for the coordinates). Two solvers
are provided: the assembled real system with LU (``dense``) and the closed
form ``X = L Phi(L^-1 H L^-H)`` (``triangular``), where ``Phi`` keeps the
strictly lower part and half the diagonal. They agree to roundoff; the
triangular form costs O(d^3) instead of O(d^6).

When ``rho0`` is rank deficient the shifted Cholesky factor has pivots of
order ``sqrt(c)``, and a pivot that small sitting ahead of the populated
states spoils every correction (they grow like ``1/sqrt(c)``). The default
``ordering="auto"`` therefore permutes the basis so the populated states
come first (stable sort on ``diag(rho0)``) before factorizing, and undoes
the permutation when the density matrix is rebuilt.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _kernels
from . import linalg as la
from .errors import InternalConsistencyError, NotPositiveDefinite, SingularZ0

RHS_HERMITIAN_TOL = 1e-9
AUTO_C_THRESHOLD = 1e-8
AUTO_C_VALUE = 1e-9


@dataclass
class AmplitudeSeries:
    order: int
    corrections: list[np.ndarray]
    reg_c: float
    z0_condition: float = float("nan")
    method: str = ""
    perm: np.ndarray | None = None

    def truncated(self, alpha: float, order: int | None = None) -> np.ndarray:
        m = self.order if order is None else order
        return sum(alpha**j * z for j, z in enumerate(self.corrections[: m + 1]))


def default_reg_c(rho0) -> float:
    """0 when rho0 is comfortably positive definite, else the small shift 1e-9."""
    return 0.0 if la.min_eigenvalue_hermitian(rho0) > AUTO_C_THRESHOLD else AUTO_C_VALUE


def support_first_permutation(rho0) -> np.ndarray:
    """Basis order putting the largest populations of ``rho0`` first (stable)."""
    return np.argsort(-np.real(np.diag(rho0)), kind="stable")


def _permute(a, perm):
    return a[np.ix_(perm, perm)]


def _unpermute(a, perm):
    out = np.empty_like(a)
    out[np.ix_(perm, perm)] = a
    return out


def seed_amplitude(rho0, c: float = 0.0) -> np.ndarray:
    """Cholesky factor of ``rho0 + c 1``."""
    if c < 0:
        raise ValueError(f"c must be non-negative, got {c}")
    rho0 = la.hermitize(rho0, what="rho0")
    if la.min_eigenvalue_hermitian(rho0) < -1e-12:
        raise NotPositiveDefinite("rho0 is not positive semidefinite")
    d = rho0.shape[0]
    return la.cholesky_lower(rho0 + c * np.eye(d))


def _check_amplitude(zeta0):
    zeta0 = la.as_matrix(zeta0)
    if np.any(np.triu(zeta0, 1) != 0):
        raise ValueError("zeta0 must be lower triangular")
    if np.any(np.abs(np.diag(zeta0).imag) > 0):
        raise ValueError("zeta0 must have a real diagonal")
    return zeta0


@dataclass
class Z0System:
    """Assembled real-linear form of ``X -> zeta0 X^H + X zeta0^H``."""

    zeta0: np.ndarray
    real_linear_matrix: np.ndarray
    condition: float
    _lu: tuple | None = None

    def solve(self, h) -> np.ndarray:
        d = self.zeta0.shape[0]
        if self._lu is None or not np.isfinite(self.condition) or self.condition * np.finfo(float).eps > 1.0:
            raise SingularZ0(f"Z0 system is singular (condition {self.condition:.3e}); increase the shift c")
        x = sla.lu_solve(self._lu, _kernels.pack_lower(h), check_finite=False)
        return _kernels.unpack_lower(x, d)

    def apply(self, x) -> np.ndarray:
        z = self.zeta0
        return z @ x.conj().T + x @ z.conj().T


def build_z0_system(zeta0) -> Z0System:
    zeta0 = _check_amplitude(zeta0)
    mat = _kernels.z0_matrix(zeta0)
    with warnings.catch_warnings():
        # singular systems are reported through the condition estimate
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(mat, check_finite=False)
    anorm = np.linalg.norm(mat, 1)
    rcond, _ = sla.lapack.dgecon(lu[0], anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else float("inf")
    return Z0System(zeta0, mat, float(cond), lu)


def solve_z0_triangular(zeta0, h) -> np.ndarray:
    """Solve ``zeta0 X^H + X zeta0^H = h`` for lower-triangular X with real diagonal."""
    low = np.asarray(zeta0)
    diag = np.abs(np.diag(low))
    if np.any(diag <= np.finfo(float).tiny) or not np.all(np.isfinite(diag)):
        raise SingularZ0("zeta0 has a zero diagonal entry; increase the shift c")
    y = sla.solve_triangular(low, h, lower=True, check_finite=False)
    s = sla.solve_triangular(low, y.conj().T, lower=True, check_finite=False).conj().T
    phi = np.tril(s, -1) + np.diag(0.5 * np.real(np.diag(s)))
    return np.tril(low @ phi)


def _seed_condition(rho0, c):
    w = np.linalg.eigvalsh(0.5 * (rho0 + rho0.conj().T)) + c
    return float(2.0 * w[-1] / w[0]) if w[0] > 0 else float("inf")


def amp_pt_corrections(
    rho_corrections,
    c: float | None = None,
    method: str = "triangular",
    ordering: str = "auto",
) -> AmplitudeSeries:
    """Amplitude corrections ``zeta_0..zeta_M`` from density corrections.

    ``c=None`` applies the default shift policy. ``method`` selects the
    ``triangular`` closed form or the assembled ``dense`` real system.
    ``ordering`` is ``natural``, ``support`` (populated states first) or
    ``auto`` (support when ``rho0`` is rank deficient). The corrections are
    expressed in the permuted basis; ``perm`` records it.
    ``z0_condition`` is the 1-norm condition estimate of the assembled
    system (dense) or the bound ``2 cond(rho0 + c 1)`` (triangular).
    """
    rhos = [np.asarray(r, dtype=np.complex128) for r in rho_corrections]
    if not rhos:
        raise ValueError("need at least the zeroth-order density matrix")
    if ordering not in ("auto", "support", "natural"):
        raise ValueError(f"unknown ordering {ordering!r}")
    deficient = la.min_eigenvalue_hermitian(rhos[0]) <= AUTO_C_THRESHOLD
    if c is None:
        c = AUTO_C_VALUE if deficient else 0.0
    perm = None
    if ordering == "support" or (ordering == "auto" and deficient):
        perm = support_first_permutation(rhos[0])
        rhos = [_permute(r, perm) for r in rhos]
    zeta0 = seed_amplitude(rhos[0], c)
    if method == "dense":
        system = build_z0_system(zeta0)
        cond = system.condition
        solve = system.solve
    elif method == "triangular":
        cond = _seed_condition(rhos[0], c)
        solve = lambda h: solve_z0_triangular(zeta0, h)  # noqa: E731
    else:
        raise ValueError(f"unknown Z0 method {method!r}")

    zetas = [zeta0]
    for j in range(1, len(rhos)):
        rhs = rhos[j] - sum((zetas[k] @ zetas[j - k].conj().T for k in range(1, j)), np.zeros_like(zeta0))
        defect = la.hermitian_defect(rhs)
        if defect > RHS_HERMITIAN_TOL:
            raise InternalConsistencyError(f"order {j}: Z0 right-hand side not Hermitian ({defect:.2e})")
        rhs = 0.5 * (rhs + rhs.conj().T)
        zetas.append(solve(rhs))
    return AmplitudeSeries(len(rhos) - 1, zetas, float(c), cond, method, perm)


def reconstruct_density(series: AmplitudeSeries, alpha: float, order: int | None = None) -> np.ndarray:
    """N[zeta~ zeta~^H] for the truncated amplitude ``zeta~``."""
    z = series.truncated(alpha, order)
    rho = z @ z.conj().T
    tr = np.trace(rho).real
    if not tr > 0:
        raise InternalConsistencyError("reconstructed density matrix has zero trace")
    rho = rho / tr
    if series.perm is not None:
        rho = _unpermute(rho, series.perm)
    return 0.5 * (rho + rho.conj().T)


def classify_singular_z0(zeta0, rhs, tol: float = 1e-10) -> str:
    """``unique``, ``infinitely_many`` or ``no_solution`` for ``Z0 X = rhs``.

    Decided a posteriori: least-squares solve of the assembled system and
    inspection of its rank and residual.
    """
    zeta0 = _check_amplitude(zeta0)
    mat = _kernels.z0_matrix(zeta0)
    b = _kernels.pack_lower(la.hermitize(rhs, tol=RHS_HERMITIAN_TOL, what="rhs"))
    x, _, rank, sv = np.linalg.lstsq(mat, b, rcond=None)
    if rank == mat.shape[1] and sv[-1] > tol * sv[0]:
        return "unique"
    resid = np.linalg.norm(mat @ x - b)
    bn = np.linalg.norm(b)
    return "infinitely_many" if resid <= tol * max(bn, 1.0) else "no_solution"


def c_stability(
    rho_corrections,
    alpha: float,
    observables: dict,
    cs=(1e-8, 1e-9, 1e-10),
    method: str = "triangular",
    ordering: str = "auto",
):
    """Largest pairwise change of each observable across the shifts ``cs``."""
    values = {}
    for c in cs:
        series = amp_pt_corrections(rho_corrections, c, method, ordering)
        rho = reconstruct_density(series, alpha)
        values[c] = {name: complex(np.sum(op.T * rho)) for name, op in observables.items()}
    spread = {}
    for name in observables:
        spread[name] = max(abs(values[a][name] - values[b][name]) for a, b in itertools.combinations(cs, 2))
    return spread, values
