"""Per-point evaluation of all methods and parallel parameter sweeps.

Grid points are independent. They are dispatched to a thread pool (the
heavy lifting happens inside LAPACK, which releases the GIL) and collected
in grid order, so results do not depend on the number of threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import amp_pt, dm_pt
from .errors import LiouvillePTError
from .liouville import steady_state_exact, steady_state_iterative
from .oracle import EXACT_DIM_CAP, SweepResult, spec_snapshot

METHODS = ("exact", "order0", "dm_pt", "amp_pt")
PT_METHODS = ("order0", "dm_pt", "amp_pt")
METHOD_TAG = {"exact": "exact", "order0": "unperturbed", "dm_pt": "dm_pt", "amp_pt": "amp_pt"}
THREADS_ENV = "LIOUVILLE_PT_THREADS"


@dataclass
class PointResult:
    value: float
    observables: dict[str, dict[str, complex]] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return bool(self.errors)


def _nan_obs(names):
    return {name: complex(math.nan, math.nan) for name in names}


def evaluate_point(
    model,
    param: str,
    value: float,
    methods=METHODS,
    order: int = 2,
    reg_c: float | None = None,
    pinv_method: str = "auto",
) -> PointResult:
    """Evaluate every requested method at ``param = value``.

    A failing method is recorded in ``errors`` and reported as NaN; the
    other methods are still evaluated.
    """
    point = model.at(param, value)
    large = point.liouville_dim > EXACT_DIM_CAP
    problem = point.prepare(sparse=large)
    names = point.observable_names
    res = PointResult(float(value))
    diag = res.diagnostics

    if "exact" in methods:
        try:
            res.observables["exact"] = problem.observe(exact_state(problem, large))
        except LiouvillePTError as exc:
            res.errors["exact"] = f"{type(exc).__name__}: {exc}"

    wanted = [m for m in PT_METHODS if m in methods]
    if wanted:
        try:
            split = problem.split()
            series = dm_pt.pt_steady_state(split, order, method=pinv_method)
            diag["pinv_method"] = series.method
            diag["solvability_max"] = max(series.solvability, default=0.0)
        except LiouvillePTError as exc:
            for m in wanted:
                res.errors[m] = f"{type(exc).__name__}: {exc}"
            series = None
        if series is not None:
            _evaluate_pt(problem, split, series, wanted, order, reg_c, res)

    for m in methods:
        res.observables.setdefault(m, _nan_obs(names))
    res.observables = {m: {k: complex(v) for k, v in res.observables[m].items()} for m in methods}
    return res


def exact_state(problem, large: bool = False):
    """Dense bordered solve, or preconditioned GMRES above the dense cap."""
    if large:
        return steady_state_iterative(problem.generator(), problem.split().l0_local)
    return steady_state_exact(problem.generator())


def _evaluate_pt(problem, split, series, wanted, order, reg_c, res):
    diag = res.diagnostics
    if "order0" in wanted:
        try:
            res.observables["order0"] = problem.observe(dm_pt.assemble_truncated(series, order=0))
        except LiouvillePTError as exc:
            res.errors["order0"] = f"{type(exc).__name__}: {exc}"
    if "dm_pt" in wanted:
        try:
            rho = dm_pt.assemble_truncated(series, order=order)
            diag["min_eig_dm_pt"] = dm_pt.positivity_report(rho).min_eig
            res.observables["dm_pt"] = problem.observe(rho)
        except LiouvillePTError as exc:
            res.errors["dm_pt"] = f"{type(exc).__name__}: {exc}"
    if "amp_pt" in wanted:
        try:
            amp = amp_pt.amp_pt_corrections(series.state_corrections, reg_c)
            rho = amp_pt.reconstruct_density(amp, split.alpha)
            diag["z0_condition"] = amp.z0_condition
            diag["reg_c"] = amp.reg_c
            diag["min_eig_amp_pt"] = dm_pt.positivity_report(rho).min_eig
            res.observables["amp_pt"] = problem.observe(rho)
        except LiouvillePTError as exc:
            res.errors["amp_pt"] = f"{type(exc).__name__}: {exc}"


def default_threads() -> int:
    """Thread count from ``LIOUVILLE_PT_THREADS`` (``auto`` = CPU count), else 1."""
    raw = os.environ.get(THREADS_ENV, "1").strip().lower()
    if raw == "auto":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer or 'auto', got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be positive, got {n}")
    return n


def run_sweep(
    model,
    param: str,
    grid,
    methods=METHODS,
    order: int = 2,
    reg_c: float | None = None,
    threads: int | None = None,
    pinv_method: str = "auto",
) -> tuple[dict[str, SweepResult], list[PointResult]]:
    """Evaluate ``methods`` on every grid point; results are in grid order."""
    methods = tuple(methods)
    if not methods:
        raise ValueError("at least one method is required")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
    if order < 0:
        raise ValueError("order must be non-negative")
    grid = [float(x) for x in grid]
    threads = default_threads() if threads is None else int(threads)

    def work(x):
        return evaluate_point(model, param, x, methods, order, reg_c, pinv_method)

    if threads <= 1:
        points = [work(x) for x in grid]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(work, grid))

    meta = {"model": model.name, "spec": spec_snapshot(model.spec), "sweep": param, "order": order, "reg_c": reg_c}
    results = {}
    for m in methods:
        series = {name: [p.observables[m][name] for p in points] for name in model.observable_names}
        results[m] = SweepResult(grid, series, METHOD_TAG[m], dict(meta))
    return results, points


def grid_points(start: float, stop: float, points: int) -> list[float]:
    if points < 2:
        raise ValueError("a sweep needs at least 2 points")
    return [float(x) for x in np.linspace(start, stop, points)]
