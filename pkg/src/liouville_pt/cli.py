"""Command-line interface: ``liouville-pt run`` and ``liouville-pt verify``.

``run`` evaluates the requested methods along a one-parameter sweep and
writes ``sweep.csv``, ``manifest.json`` and one SVG per observable into the
output directory. Exit status is 0 on success, 1 when any grid point
failed (the failure is recorded in the manifest and the sweep continues)
and 2 for invalid arguments.

``verify`` runs the acceptance checks and prints a JSON report.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, models, output
from . import sweep as sweeps

EXIT_OK, EXIT_POINT_FAILURE, EXIT_USAGE = 0, 1, 2

SPIN_FLAGS = {
    "eps_over_gamma": 0.8,
    "t_over_gamma": 0.4,
    "delta_omega_over_gamma": 0.0,
}
QUBIT_FLAGS = {
    "kappa_over_eps": 10.0,
    "g_over_eps": 0.5,
    "gamma_a_over_eps": 0.05,
    "gamma_q_over_eps": 0.05,
    "delta_omega_over_eps": 0.0,
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str = "spin_ring"
    params: dict = field(default_factory=dict)
    sweep: tuple = ("delta_omega_over_gamma", -3.0, 3.0, 201)
    methods: tuple = sweeps.METHODS
    pt_order: int = 2
    reg_c: float | None = None
    fock_cutoff: int = 3
    output: str = "liouville-pt-out"
    threads: int | None = None
    pinv_method: str = "auto"
    svg: bool = True

    def validate(self):
        if self.model not in models.MODELS:
            raise UsageError(f"unknown model {self.model!r}; choose from {sorted(models.MODELS)}")
        name, start, stop, points = self.sweep
        if int(points) < 2:
            raise UsageError("a sweep needs at least 2 points")
        if not self.methods:
            raise UsageError("at least one method is required")
        bad = [m for m in self.methods if m not in sweeps.METHODS]
        if bad:
            raise UsageError(f"unknown methods {bad}; choose from {list(sweeps.METHODS)}")
        if self.pt_order < 0:
            raise UsageError("--order must be non-negative")
        if self.reg_c is not None and self.reg_c < 0:
            raise UsageError("--reg-c must be non-negative")
        if self.threads is not None and self.threads < 1:
            raise UsageError("--threads must be positive")
        model = self.build_model()
        if name not in model.params:
            raise UsageError(f"{self.model} cannot sweep {name!r}; choose from {sorted(model.params)}")
        return model

    def build_model(self):
        p = dict(self.params)
        try:
            if self.model == "spin_ring":
                spec = models.SpinRingSpec(
                    n_sites=int(p.pop("n_sites", 4)),
                    delta_omega=p.pop("delta_omega_over_gamma", SPIN_FLAGS["delta_omega_over_gamma"]),
                    epsilon=p.pop("eps_over_gamma", SPIN_FLAGS["eps_over_gamma"]),
                    t_coupling=p.pop("t_over_gamma", SPIN_FLAGS["t_over_gamma"]),
                    gamma=1.0,
                )
                model = models.SpinRingModel(spec)
            else:
                spec = models.QubitRingSpec(
                    fock_cutoff=self.fock_cutoff,
                    delta_omega=p.pop("delta_omega_over_eps", QUBIT_FLAGS["delta_omega_over_eps"]),
                    epsilon=1.0,
                    kappa=p.pop("kappa_over_eps", QUBIT_FLAGS["kappa_over_eps"]),
                    g=p.pop("g_over_eps", QUBIT_FLAGS["g_over_eps"]),
                    gamma_a=p.pop("gamma_a_over_eps", QUBIT_FLAGS["gamma_a_over_eps"]),
                    gamma_q=p.pop("gamma_q_over_eps", QUBIT_FLAGS["gamma_q_over_eps"]),
                )
                model = models.QubitRingModel(spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if p:
            raise UsageError(f"parameters {sorted(p)} do not apply to {self.model}")
        return model


def execute(cfg: RunConfig) -> int:
    """Run a validated configuration and write its outputs; returns the exit status."""
    model = cfg.validate()
    name, start, stop, points = cfg.sweep
    grid = sweeps.grid_points(float(start), float(stop), int(points))
    threads = sweeps.default_threads() if cfg.threads is None else cfg.threads
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    results, pts = sweeps.run_sweep(model, name, grid, cfg.methods, cfg.pt_order, cfg.reg_c, threads, cfg.pinv_method)
    wall = time.perf_counter() - t0

    methods = list(cfg.methods)
    names = model.observable_names
    output.write_csv(outdir / "sweep.csv", name, results, methods, names)
    if cfg.svg:
        output.write_svgs(outdir, name, results, methods, names)
    failed = [p.value for p in pts if p.failed]
    manifest = {
        "software": "liouville-pt",
        "version": __version__,
        "model": cfg.model,
        "parameters": output._jsonable(model.spec.__dict__),
        "sweep": {"parameter": name, "start": float(start), "stop": float(stop), "points": int(points)},
        "methods": methods,
        "order": cfg.pt_order,
        "reg_c": cfg.reg_c,
        "reg_c_policy": "1e-9 when rho0 is rank deficient, else 0" if cfg.reg_c is None else "fixed",
        "pinv_method": cfg.pinv_method,
        "fock_cutoff": cfg.fock_cutoff if cfg.model == "qubit_ring" else None,
        "threads": threads,
        "wall_time_s": round(wall, 3),
        "failed_points": failed,
        "points": [output.point_record(p) for p in pts],
    }
    output.write_manifest(outdir / "manifest.json", manifest)
    for p in pts:
        for method, msg in p.errors.items():
            print(f"warning: {name}={p.value:.6g} {method}: {msg}", file=sys.stderr)
    return EXIT_POINT_FAILURE if failed else EXIT_OK


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected name:start:stop:points")
    try:
        return parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep specification {text!r}") from None


def _parse_threads(text: str):
    if text == "auto":
        return os.cpu_count() or 1
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("threads must be an integer or 'auto'") from None


def _parse_ids(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("criteria must be comma-separated integers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liouville-pt", description="Perturbative steady states of Lindblad generators.")
    parser.add_argument("--version", action="version", version=f"liouville-pt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a parameter sweep")
    run.add_argument("--model", choices=sorted(models.MODELS), default="spin_ring")
    for flag in sorted(set(SPIN_FLAGS) | set(QUBIT_FLAGS)):
        run.add_argument("--" + flag.replace("_", "-"), dest=flag, type=float, default=None)
    run.add_argument("--gammas-over-eps", type=float, default=None, help="set gamma_a and gamma_q together")
    run.add_argument("--n-sites", type=int, default=None, help="spin ring size (default 4)")
    run.add_argument("--sweep", type=_parse_sweep, default=None, help="name:start:stop:points")
    run.add_argument("--methods", default=",".join(sweeps.METHODS))
    run.add_argument("--order", type=int, default=2)
    run.add_argument("--reg-c", type=float, default=None)
    run.add_argument("--fock-cutoff", type=int, default=3)
    run.add_argument("--pinv", choices=("auto", "svd", "bordered", "local"), default="auto")
    run.add_argument("--output", default="liouville-pt-out")
    run.add_argument("--threads", type=_parse_threads, default=None, help=f"default from ${sweeps.THREADS_ENV} or 1")
    run.add_argument("--no-svg", action="store_true")

    ver = sub.add_parser("verify", help="run the acceptance checks and print a JSON report")
    ver.add_argument("--criteria", type=_parse_ids, default=None, help="comma-separated ids (default all)")
    ver.add_argument("--mutate-l1-sign", action="store_true", help="negative control: flip the sign of L1")
    ver.add_argument("--qubit-points", type=int, default=201)
    ver.add_argument("--output", default=None, help="also write the report to this file")
    ver.add_argument("--strict", action="store_true", help="exit 1 if any criterion fails")
    return parser


def config_from_args(args) -> RunConfig:
    params = {}
    allowed = SPIN_FLAGS if args.model == "spin_ring" else QUBIT_FLAGS
    for flag in set(SPIN_FLAGS) | set(QUBIT_FLAGS):
        value = getattr(args, flag)
        if value is None:
            continue
        if flag not in allowed:
            raise UsageError(f"--{flag.replace('_', '-')} does not apply to {args.model}")
        params[flag] = value
    if args.gammas_over_eps is not None:
        if args.model != "qubit_ring":
            raise UsageError("--gammas-over-eps applies to qubit_ring only")
        params.setdefault("gamma_a_over_eps", args.gammas_over_eps)
        params.setdefault("gamma_q_over_eps", args.gammas_over_eps)
    if args.n_sites is not None:
        if args.model != "spin_ring":
            raise UsageError("--n-sites applies to spin_ring only")
        params["n_sites"] = args.n_sites
    model_cls = models.MODELS[args.model]
    sweep_spec = args.sweep or (model_cls.default_sweep, -3.0, 3.0, 201)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return RunConfig(
        model=args.model,
        params=params,
        sweep=sweep_spec,
        methods=methods,
        pt_order=args.order,
        reg_c=args.reg_c,
        fock_cutoff=args.fock_cutoff,
        output=args.output,
        threads=args.threads,
        pinv_method=args.pinv,
        svg=not args.no_svg,
    )


def verify(args) -> int:
    from . import checks

    grid = sweeps.grid_points(-3.0, 3.0, args.qubit_points)
    checker = checks.Checker(mutate_l1=args.mutate_l1_sign, detuning_grid=grid)
    ids = args.criteria or sorted(checks.NAMES)
    unknown = [i for i in ids if i not in checks.NAMES]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    report = []
    for cid in ids:
        res = checker.check(cid)
        print(res.line(), file=sys.stderr)
        report.append(res.as_dict())
    text = json.dumps(output._jsonable({"version": __version__, "mutate_l1_sign": args.mutate_l1_sign, "criteria": report}), indent=2)
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    if args.strict and not all(r["passed"] for r in report):
        return EXIT_POINT_FAILURE
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return execute(config_from_args(args))
        return verify(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
