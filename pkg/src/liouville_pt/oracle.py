"""Independent reference results.

Exact steady states come from a direct solve of the full generator, never
from the perturbation machinery. The driven two-level system has a closed
form (below), eigenpairs are followed across the coupling by overlap
continuity, and convergence orders are measured by log-log fits.

Driven damped two-level system
------------------------------
With ``H = dw s+ s- + eps (s+ + s-)`` and decay ``gamma`` on ``s-``, write
``s = <s->`` and ``p = <s+ s->``. The Bloch equations

    ds/dt = -(i dw + gamma/2) s + i eps (2p - 1)
    dp/dt = -gamma p - i eps (s^* - s)

have the stationary solution

    p = eps^2 / (dw^2 + gamma^2/4 + 2 eps^2)
    s = -eps (dw + i gamma/2) (1 - 2p) / (dw^2 + gamma^2/4).

(Insert ``s`` from the first equation into the second: ``i eps (s^* - s)``
becomes ``-2 eps^2 gamma/2 (1-2p) / (dw^2 + gamma^2/4)`` and ``p`` follows.)
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

from . import linalg as la
from .dm_pt import PTSplit, assemble_truncated, pt_steady_state
from .errors import ErrorFloor, NonUniqueSteadyState, TrackingLost
from .liouville import EigenPair, eig_biorthonormal, steady_state_exact

EXACT_DIM_CAP = 4096
TRACKING_MIN_OVERLAP = 0.7
NOISE_FACTOR = 100.0
METHOD_TAGS = ("exact", "unperturbed", "dm_pt", "amp_pt")


@dataclass
class SweepResult:
    """Observable curves of one method along a one-parameter grid."""

    grid: list[float]
    observables: dict[str, list[complex]]
    method_tag: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method_tag not in METHOD_TAGS:
            raise ValueError(f"method_tag must be one of {METHOD_TAGS}, got {self.method_tag!r}")
        n = len(self.grid)
        for name, series in self.observables.items():
            if len(series) != n:
                raise ValueError(f"series {name!r} has {len(series)} points, grid has {n}")

    def array(self, name: str) -> np.ndarray:
        return np.asarray(self.observables[name], dtype=np.complex128)


def spec_snapshot(spec) -> dict:
    return asdict(spec) if is_dataclass(spec) else dict(spec)


def exact_sweep(model, grid, param: str | None = None, cap: int = EXACT_DIM_CAP) -> SweepResult:
    """Exact steady-state observables of ``model`` along ``grid``.

    ``model`` is a sweep adapter from :mod:`liouville_pt.models`; ``param``
    defaults to its detuning.
    """
    param = param or model.default_sweep
    grid = [float(x) for x in grid]
    if model.liouville_dim > cap:
        raise ValueError(f"Liouville dimension {model.liouville_dim} exceeds the exact-sweep cap {cap}")
    series = {name: [] for name in model.observable_names}
    for x in grid:
        problem = model.at(param, x).prepare()
        try:
            rho = steady_state_exact(problem.generator())
        except NonUniqueSteadyState as exc:
            raise NonUniqueSteadyState(f"{param} = {x!r}: {exc}") from exc
        for name, value in problem.observe(rho).items():
            series[name].append(complex(value))
    meta = {"model": model.name, "spec": spec_snapshot(model.spec), "sweep": param}
    return SweepResult(grid, series, "exact", meta)


def tls_steady_analytic(delta_omega: float, epsilon: float, gamma: float) -> dict:
    """Closed-form steady state of the driven damped two-level system."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    den = delta_omega**2 + 0.25 * gamma**2
    p = epsilon**2 / (den + 2.0 * epsilon**2)
    s = -epsilon * (delta_omega + 0.5j * gamma) * (1.0 - 2.0 * p) / den
    return {"sigma_minus": complex(s), "pop_e": float(p)}


@dataclass(frozen=True)
class TrackedPair(EigenPair):
    """Eigenpair on a tracked branch with its overlap to the previous step."""

    alpha: float = 0.0
    overlap: float = 1.0


def _overlap(x, y) -> float:
    return abs(la.hs_inner(x, y)) / (np.linalg.norm(x) * np.linalg.norm(y))


def track_eigenpair(split: PTSplit, seed: EigenPair, alphas, min_overlap: float = TRACKING_MIN_OVERLAP) -> list[TrackedPair]:
    """Follow ``seed`` along ``L0 + alpha L1`` for ascending ``alphas``.

    At each step the candidate whose right eigenstate overlaps most with the
    previous one is taken; :class:`TrackingLost` is raised when the best
    normalized overlap drops below ``min_overlap``.
    """
    alphas = [float(a) for a in alphas]
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be sorted ascending")
    if alphas and alphas[0] < 0:
        raise ValueError("alphas must start at or above zero")
    out = []
    prev = seed.right
    for a in alphas:
        if a == 0.0:
            pair = TrackedPair(seed.value, seed.right, seed.left, 0.0, 1.0)
        else:
            pairs = eig_biorthonormal(split.full(a))
            scores = [_overlap(prev, p.right) for p in pairs]
            k = int(np.argmax(scores))
            if scores[k] < min_overlap:
                raise TrackingLost(f"alpha = {a:.6g}: best overlap {scores[k]:.3f} < {min_overlap}")
            best = pairs[k]
            pair = TrackedPair(best.value, best.right, best.left, a, float(scores[k]))
        out.append(pair)
        prev = pair.right
    return out


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def check_noise_floor(errors, scale: float = 1.0) -> None:
    floor = NOISE_FACTOR * np.finfo(float).eps * scale
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= floor):
        raise ErrorFloor(f"smallest error {errors.min():.3e} is at the noise floor {floor:.1e}")


def _check_decade(alphas):
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size < 5:
        raise ValueError("need at least 5 alpha samples")
    if np.any(alphas <= 0) or alphas.max() / alphas.min() < 10.0 * (1 - 1e-12):
        raise ValueError("alpha samples must be positive and span a decade")
    return alphas


def convergence_slope(split: PTSplit, observable, order: int, alphas, reference=None) -> float:
    """Convergence order of the truncated steady state.

    ``observable`` is ``None`` for the trace-norm state error, or a matrix
    ``A`` for the error of ``Tr(A rho)``. ``reference(alpha)`` returns the
    comparison state; it defaults to the exact steady state of
    ``split.full(alpha)``. Raises :class:`ErrorFloor` when an error is within
    100 eps of zero.
    """
    alphas = _check_decade(alphas)
    series = pt_steady_state(split, order)
    if reference is None:
        reference = lambda a: steady_state_exact(split.full(a))  # noqa: E731
    errors = []
    for a in alphas:
        diff = assemble_truncated(series, a, order) - reference(a)
        if observable is None:
            errors.append(la.trace_norm(diff))
        else:
            errors.append(abs(np.sum(np.asarray(observable).T * diff)))
    check_noise_floor(errors)
    return loglog_slope(alphas, errors)


def linear_ring_response(delta_omega: float, epsilon: float, kappa: float, gamma_a: float) -> np.ndarray:
    """Site amplitudes of the driven linear three-resonator ring.

    Solves ``(dw - i gamma_a/2) alpha_n + kappa (alpha_{n-1} + alpha_{n+1})
    = -eps delta_{n,1}``, the stationary mean-field equations of the ring
    without the qubit.
    """
    ring = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=np.complex128)
    mat = (delta_omega - 0.5j * gamma_a) * np.eye(3) + kappa * ring
    rhs = np.array([-epsilon, 0, 0], dtype=np.complex128)
    return np.linalg.solve(mat, rhs)
