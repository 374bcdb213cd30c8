"""Acceptance checks shared by ``liouville-pt verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured quantities.
The :class:`Checker` keeps expensive intermediate data (the qubit-ring
sweep) so related checks reuse it. ``mutate_l1=True`` flips the sign of
every perturbation generator handed to the perturbative code (the exact
references are untouched); the checks must then fail.
"""
from __future__ import annotations

import itertools
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import amp_pt, dm_pt
from . import linalg as la
from . import models, oracle, output, sweep
from .dm_pt import PTSplit
from .liouville import eig_biorthonormal, degenerate_with, steady_state_exact

SLOPE_TOL = 0.3
NAMES = {
    1: "penrose_suite",
    2: "convergence_order",
    3: "eigenvalue_pt",
    4: "spin_ring_regime",
    5: "non_positivity_and_cure",
    6: "qubit_ring_regime",
    7: "c_stability",
    8: "amplitude_density_consistency",
    9: "shift_equivalence",
    10: "determinism_csv",
}
BUDGET_S = {1: 10, 2: 60, 3: 60, 4: 300, 5: 600, 6: 900, 8: 60}

SPIN3 = models.SpinRingSpec(n_sites=3, delta_omega=0.5, epsilon=0.8, t_coupling=1.0)
SPIN2 = models.SpinRingSpec(n_sites=2, delta_omega=0.5, epsilon=0.8, t_coupling=1.0)
SPIN4 = models.SpinRingSpec(n_sites=4, epsilon=0.8, t_coupling=0.4)
QUBIT_RING = models.QubitRingSpec(fock_cutoff=3, epsilon=1.0, kappa=10.0, g=0.5, gamma_a=0.05, gamma_q=0.05)
SMALL_T = np.logspace(-2, -1, 6)
DETUNING_GRID = sweep.grid_points(-3.0, 3.0, 201)
QUBIT_C = 1e-9
C_VALUES = (1e-8, 1e-9, 1e-10)


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def line(self) -> str:
        return f"criterion {self.id:2d} {self.name:<30s} {'PASS' if self.passed else 'FAIL'}"

    def as_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": bool(self.passed), "measured": self.measured, "runtime_s": self.runtime_s}


def local_maxima(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    idx = [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] >= v[i + 1]]
    return np.asarray(idx, dtype=int)


def main_peaks(values, count: int = 2) -> np.ndarray:
    """Indices of the ``count`` highest local maxima, in grid order."""
    idx = local_maxima(values)
    v = np.asarray(values)
    top = idx[np.argsort(-v[idx], kind="stable")][:count]
    return np.sort(top)


class Checker:
    def __init__(self, mutate_l1: bool = False, detuning_grid=None, seed: int = 20240517):
        self.mutate_l1 = mutate_l1
        self.detuning_grid = list(DETUNING_GRID if detuning_grid is None else detuning_grid)
        self.seed = seed
        self._qubit_data = None

    # ------------------------------------------------------------ helpers

    def split(self, split: PTSplit) -> PTSplit:
        if not self.mutate_l1:
            return split
        return replace(split, l1=split.l1.scaled(-1.0))

    def run(self, ids=None) -> list[CheckResult]:
        ids = sorted(NAMES) if ids is None else list(ids)
        return [self.check(i) for i in ids]

    def check(self, cid: int) -> CheckResult:
        if cid not in NAMES:
            raise ValueError(f"unknown criterion {cid}; choose from 1-{len(NAMES)}")
        t0 = time.perf_counter()
        passed, measured = getattr(self, f"_c{cid}")()
        dt = time.perf_counter() - t0
        if cid in BUDGET_S:
            measured["runtime_budget_s"] = BUDGET_S[cid]
            passed = passed and dt < BUDGET_S[cid]
        return CheckResult(cid, NAMES[cid], bool(passed), measured, round(dt, 3))

    def _spin_split(self, spec) -> PTSplit:
        return self.split(models.spin_ring_split(spec))

    # ------------------------------------------------------------ 1

    def _c1(self):
        rng = np.random.default_rng(self.seed)
        worst = [0.0] * 4
        worst_proj = 0.0
        deficient = 0
        for k in range(50):
            m, n = (int(x) for x in rng.integers(4, 65, size=2))
            full = min(m, n)
            r = full if k % 2 == 0 else int(rng.integers(1, full))
            deficient += r < full
            b = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
            c = rng.normal(size=(r, n)) + 1j * rng.normal(size=(r, n))
            a = b @ c
            p = la.pinv(a)
            res = la.penrose_residuals(a, p.matrix)
            worst = [max(w, x) for w, x in zip(worst, res)]
            q, _ = np.linalg.qr(b)
            proj = q @ q.conj().T
            worst_proj = max(worst_proj, np.linalg.norm(a @ p.matrix - proj) / np.linalg.norm(proj))
        ok = max(worst) <= 1e-10 and worst_proj <= 1e-10
        return ok, {"max_penrose_residuals": worst, "max_range_projector_error": worst_proj, "rank_deficient_cases": deficient}

    # ------------------------------------------------------------ 2

    def _c2(self):
        split = self._spin_split(SPIN3)
        exact = models.SpinRingModel(SPIN3)
        series = dm_pt.pt_steady_state(split, 3)
        refs = [steady_state_exact(exact.at("t_over_gamma", t).prepare().generator()) for t in SMALL_T]
        slopes = {}
        for m in (1, 2, 3):
            errs = [la.trace_norm(dm_pt.assemble_truncated(series, t, m) - r) for t, r in zip(SMALL_T, refs)]
            oracle.check_noise_floor(errs)
            slopes[m] = oracle.loglog_slope(SMALL_T, errs)
        ok = all(abs(slopes[m] - (m + 1)) <= SLOPE_TOL for m in slopes)
        return ok, {"slopes": slopes, "t_range": [SMALL_T[0], SMALL_T[-1]]}

    # ------------------------------------------------------------ 3

    def _c3(self):
        split = self._spin_split(SPIN2)
        spectrum = eig_biorthonormal(split.l0)
        scale = split.l0.norm()
        seed, series = None, None
        for pair in spectrum[1:]:
            if degenerate_with(spectrum, pair.value, scale) != 1:
                continue
            s = dm_pt.pt_eigenpair(split, pair, 4, spectrum=spectrum)
            if all(abs(x) > 1e-8 for x in s.eigvalue_corrections[1:]):
                seed, series = pair, s
                break
        if seed is None:
            return False, {"error": "no non-degenerate decaying mode with non-vanishing corrections"}
        # exact branch tracked on the unmutated generator
        ref_split = models.spin_ring_split(SPIN2)
        branch = oracle.track_eigenpair(ref_split, seed, np.concatenate([[0.0], SMALL_T]))[1:]
        slopes = {}
        for m in (1, 2, 3):
            errs = [abs(series.partial_eigenvalue(t, m) - p.value) for t, p in zip(SMALL_T, branch)]
            oracle.check_noise_floor(errs)
            slopes[m] = oracle.loglog_slope(SMALL_T, errs)
        steady = dm_pt.pt_eigenpair(split, spectrum[0], 4, spectrum=spectrum)
        steady_max = max(abs(x) for x in steady.eigvalue_corrections[1:])
        ok = all(abs(slopes[m] - (m + 1)) <= SLOPE_TOL for m in slopes) and steady_max <= 1e-12
        return ok, {
            "mode_eigenvalue": seed.value,
            "slopes": slopes,
            "steady_branch_max_correction": steady_max,
            "min_tracking_overlap": min(p.overlap for p in branch),
        }

    # ------------------------------------------------------------ 4

    def _spin_sweep(self, spec, grid):
        model = models.SpinRingModel(spec)
        split_fn = self.split
        exact, order0, pt2, amp, min_dm, min_amp = [], [], [], [], [], []
        obs = models.spin_ring_observables(spec.n_sites)["sigma_minus_1"]
        for x in grid:
            problem = model.at("delta_omega_over_gamma", x).prepare()
            exact.append(np.sum(obs.T * steady_state_exact(problem.generator())))
            split = split_fn(problem.split())
            series = dm_pt.pt_steady_state(split, 2)
            rho2 = dm_pt.assemble_truncated(series)
            order0.append(np.sum(obs.T * series.state_corrections[0]))
            pt2.append(np.sum(obs.T * rho2))
            min_dm.append(la.min_eigenvalue_hermitian(rho2))
            a = amp_pt.amp_pt_corrections(series.state_corrections)
            rho_a = amp_pt.reconstruct_density(a, split.alpha)
            amp.append(np.sum(obs.T * rho_a))
            min_amp.append(la.min_eigenvalue_hermitian(rho_a))
        return {k: np.asarray(v) for k, v in dict(exact=exact, order0=order0, dm_pt=pt2, amp_pt=amp, min_dm=min_dm, min_amp=min_amp).items()}

    def _c4(self):
        grid = np.asarray(DETUNING_GRID)
        step = grid[1] - grid[0]
        data = self._spin_sweep(SPIN4, grid)
        ex, o0, d2 = (np.abs(data[k]) for k in ("exact", "order0", "dm_pt"))
        e0, e2 = np.abs(o0 - ex), np.abs(d2 - ex)
        mask = e0 > 1e-3
        worse = np.where(mask & (e2 >= e0))[0]
        pk_ex, pk_d2, pk_o0 = main_peaks(ex), main_peaks(d2), main_peaks(o0)
        steps_apart = (np.abs(pk_ex - pk_d2)).tolist() if len(pk_ex) == len(pk_d2) == 2 else None

        def shifted_asymmetric(curve, peaks):
            if len(peaks) != 2:
                return False
            shifted = np.min(np.abs(peaks - pk_o0)) > 2
            asym = abs(grid[peaks[0]] + grid[peaks[1]]) > step or abs(curve[peaks[0]] - curve[peaks[1]]) > 1e-3 * curve[peaks].max()
            return bool(shifted and asym)

        improve_ok = len(worse) == 0
        peaks_ok = steps_apart is not None and max(steps_apart) <= 2
        structure_ok = shifted_asymmetric(ex, pk_ex) and shifted_asymmetric(d2, pk_d2)
        return improve_ok and peaks_ok and structure_ok, {
            "points_checked": int(mask.sum()),
            "points_where_order2_not_better": [float(grid[i]) for i in worse],
            "order0_error_there": [float(e0[i]) for i in worse],
            "order2_error_there": [float(e2[i]) for i in worse],
            "max_order2_error": float(e2.max()),
            "peaks_exact": grid[pk_ex].tolist(),
            "peaks_dm_pt": grid[pk_d2].tolist(),
            "peaks_order0": grid[pk_o0].tolist(),
            "peak_offset_steps": steps_apart,
            "shifted_asymmetric": structure_ok,
        }

    # ------------------------------------------------------------ 5

    def _c5(self):
        grid = np.asarray(DETUNING_GRID)
        found = []
        per_t = {}
        for t in (0.2, 0.4, 0.6, 0.8, 1.0):
            data = self._spin_sweep(SPIN4.with_(t_coupling=t), grid)
            neg = data["min_dm"] < -1e-12
            per_t[t] = {"negative_points": int(neg.sum()), "min_eig_dm_pt": float(data["min_dm"].min())}
            for i in np.where(neg)[0]:
                found.append((t, float(grid[i]), float(data["min_dm"][i]), float(data["min_amp"][i])))
        cured = [f for f in found if f[3] >= -1e-14]
        ok = len(found) > 0 and len(cured) == len(found)
        worst_amp = min((f[3] for f in found), default=None)
        return ok, {"per_t": per_t, "non_positive_points": len(found), "min_eig_amp_pt_at_those_points": worst_amp}

    # ------------------------------------------------------------ 6, 7

    def qubit_ring_data(self):
        """Cutoff-3 and cutoff-4 qubit-ring sweeps (computed once)."""
        if self._qubit_data is not None:
            return self._qubit_data
        names = models.QubitRingModel.observable_names
        store = {k: {n: [] for n in names} for k in ("exact", "dm_pt", "amp_pt", "exact4", "dm_pt4", "amp_pt4")}
        cstab = {c: {n: [] for n in names} for c in C_VALUES}
        for x in self.detuning_grid:
            for cutoff, suffix in ((3, ""), (4, "4")):
                model = models.QubitRingModel(QUBIT_RING.with_(fock_cutoff=cutoff)).at("delta_omega_over_eps", x)
                large = model.liouville_dim > oracle.EXACT_DIM_CAP
                problem = model.prepare(sparse=large)
                rho_ex = sweep.exact_state(problem, large)
                split = self.split(problem.split())
                series = dm_pt.pt_steady_state(split, 2)
                rho_dm = dm_pt.assemble_truncated(series)
                a = amp_pt.amp_pt_corrections(series.state_corrections, QUBIT_C)
                rho_amp = amp_pt.reconstruct_density(a, split.alpha)
                for key, rho in (("exact", rho_ex), ("dm_pt", rho_dm), ("amp_pt", rho_amp)):
                    for n, v in problem.observe(rho).items():
                        store[key + suffix][n].append(complex(v))
                if cutoff == 3:
                    for c in C_VALUES:
                        a = amp_pt.amp_pt_corrections(series.state_corrections, c)
                        for n, v in problem.observe(amp_pt.reconstruct_density(a, split.alpha)).items():
                            cstab[c][n].append(complex(v))
        self._qubit_data = (
            {k: {n: np.asarray(v) for n, v in d.items()} for k, d in store.items()},
            {c: {n: np.asarray(v) for n, v in d.items()} for c, d in cstab.items()},
        )
        return self._qubit_data

    def _c6(self):
        grid = np.asarray(self.detuning_grid)
        data, _ = self.qubit_ring_data()
        i0 = int(np.argmin(np.abs(grid)))

        def peak_near_zero(curve):
            idx = local_maxima(np.abs(curve))
            return bool(np.any(np.abs(idx - i0) <= 2)), [float(grid[i]) for i in idx if abs(i - i0) <= 10]

        ex_ok, ex_near = peak_near_zero(data["exact"]["sigma_minus"])
        d2_ok, d2_near = peak_near_zero(data["dm_pt"]["sigma_minus"])
        agree = {}
        for n in models.QubitRingModel.observable_names:
            f = output.plotted_value
            peak = max(np.abs(f(n, data["exact"][n])))
            diff = np.max(np.abs(np.asarray(f(n, data["amp_pt"][n])) - np.asarray(f(n, data["dm_pt"][n]))))
            agree[n] = {"max_amp_vs_dm": float(diff), "exact_peak": float(peak), "ratio": float(diff / peak)}
        cut = {}
        for key in ("exact", "dm_pt", "amp_pt"):
            cut[key] = max(float(np.max(np.abs(data[key + "4"][n] - data[key][n]))) for n in data[key])
        ok = ex_ok and d2_ok and all(v["ratio"] <= 0.1 for v in agree.values()) and max(cut.values()) < 1e-4
        return ok, {
            "points": len(grid),
            "sigma_minus_maxima_near_zero_exact": ex_near,
            "sigma_minus_maxima_near_zero_dm_pt": d2_near,
            "amp_vs_dm_agreement": agree,
            "cutoff_3_to_4_max_change": cut,
        }

    def _c7(self):
        _, cstab = self.qubit_ring_data()
        spread = {}
        for n in models.QubitRingModel.observable_names:
            spread[n] = max(float(np.max(np.abs(cstab[a][n] - cstab[b][n]))) for a, b in itertools.combinations(C_VALUES, 2))
        return max(spread.values()) <= 1e-6, {"max_pairwise_change": spread, "c_values": list(C_VALUES)}

    # ------------------------------------------------------------ 8

    def _c8(self):
        split = self._spin_split(SPIN3)
        m = 2
        series = dm_pt.pt_steady_state(split, m)
        amp = amp_pt.amp_pt_corrections(series.state_corrections)
        errs = [la.trace_norm(amp_pt.reconstruct_density(amp, t) - dm_pt.assemble_truncated(series, t)) for t in SMALL_T]
        oracle.check_noise_floor(errs)
        slope = oracle.loglog_slope(SMALL_T, errs)
        return slope >= m + 1 - SLOPE_TOL, {"order": m, "slope": slope, "required": f">= {m + 1} (fit tolerance {SLOPE_TOL})"}

    # ------------------------------------------------------------ 9

    def _c9(self):
        split = self._spin_split(SPIN3)
        rng = np.random.default_rng(self.seed)
        slopes = {}
        for m in (1, 2, 3):
            shifts = rng.uniform(-1.0, 1.0, size=m + 1)
            base = dm_pt.pt_steady_state(split, m)
            alt = shifted_steady_state(split, m, shifts)
            errs = [la.trace_norm(dm_pt.assemble_truncated(alt, t) - dm_pt.assemble_truncated(base, t)) for t in SMALL_T]
            oracle.check_noise_floor(errs)
            slopes[m] = oracle.loglog_slope(SMALL_T, errs)
        ok = all(slopes[m] >= m + 1 - SLOPE_TOL for m in slopes)
        return ok, {"slopes": slopes}

    # ------------------------------------------------------------ 10

    def _c10(self):
        from .cli import RunConfig, execute

        cfg = RunConfig(model="spin_ring", params={"eps_over_gamma": 0.8, "t_over_gamma": 0.4, "n_sites": 3}, sweep=("delta_omega_over_gamma", -3.0, 3.0, 21))
        with tempfile.TemporaryDirectory() as tmp:
            texts = []
            for k, threads in enumerate((1, 1, 4)):
                out = Path(tmp) / f"run{k}"
                execute(replace(cfg, output=str(out), threads=threads, svg=False))
                texts.append((out / "sweep.csv").read_bytes())
        first = texts[0].decode()
        header_ok = first.startswith("# liouville-pt v") and "\r" not in first
        ok = texts[0] == texts[1] and texts[0] == texts[2] and header_ok
        return ok, {"repeat_identical": texts[0] == texts[1], "threads_identical": texts[0] == texts[2], "header_ok": header_ok}


def shifted_steady_state(split: PTSplit, order: int, shifts) -> dm_pt.PTSeries:
    """Steady-state corrections built with a different generalized inverse.

    Each order is solved with the Moore-Penrose pseudoinverse and then
    shifted by ``shifts[j] * rho0``; the shifted correction feeds the next
    order. Any such choice solves the same recursion.
    """
    base = dm_pt.pt_steady_state(split, 0)
    rho0 = base.state_corrections[0]
    d = split.dim
    solver = dm_pt.shifted_pinv(split, 0.0, rho0, np.eye(d))
    rhos = [rho0]
    for j in range(1, order + 1):
        f = -split.l1.apply(rhos[-1])
        r = la.unvec(solver.solve(la.vec(f)), d, d)
        rhos.append(r + shifts[j] * rho0)
    return dm_pt.PTSeries(0, split.alpha, order, [0j] * (order + 1), rhos, [], "shifted")


def run_checks(ids=None, mutate_l1: bool = False, detuning_grid=None) -> list[CheckResult]:
    return Checker(mutate_l1=mutate_l1, detuning_grid=detuning_grid).run(ids)
