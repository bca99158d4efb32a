"""Command-line entry point: simulate, adjoint, grad-check, optimize, verify.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
Flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .adjoint import evolve_backward
from .config import ConfigError, build, from_dict, load_config, optimizer_options
from .forward import BlowUpError, energy_identity_residual
from .gradient import h1_riesz_lift
from .grid import State, write_snapshot
from .optimizer import optimize, stationarity_residual
from .verification import VerifyConfig, gradient_check, report_json, run_all

log = logging.getLogger("nlscontrol")

# flag dest -> (section, key)
OVERRIDES = {
    "points": ("grid", "points"),
    "half_width": ("grid", "half_width"),
    "lam": ("model", "lambda"),
    "sigma": ("model", "sigma"),
    "T": ("control", "T"),
    "n_steps": ("control", "n_steps"),
    "phi0": ("control", "phi0"),
    "shape": ("control", "shape"),
    "gamma1": ("cost", "gamma1"),
    "gamma2": ("cost", "gamma2"),
    "max_iters": ("optimizer", "max_iters"),
    "stride": ("solver", "stride"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nlscontrol", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", "adjoint", "grad-check", "optimize", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", default="default", help="YAML config path or 'default'")
        s.add_argument("--out", type=Path, default=None, help="output directory")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--json", action="store_true", help="print the machine-readable report")
        s.add_argument("--points", type=int)
        s.add_argument("--half-width", type=float)
        s.add_argument("--lambda", dest="lam", type=float)
        s.add_argument("--sigma", type=float)
        s.add_argument("--T", type=float)
        s.add_argument("--n-steps", type=int)
        s.add_argument("--phi0", type=float)
        s.add_argument("--shape", choices=["constant", "ramp", "sine"])
        s.add_argument("--gamma1", type=float)
        s.add_argument("--gamma2", type=float)
        s.add_argument("--max-iters", type=int)
        s.add_argument("--stride", type=int)
        if name == "simulate":
            s.add_argument("--snapshot-times", type=float, nargs="*", default=None)
        if name == "grad-check":
            s.add_argument("--directions", type=int, default=3)
            s.add_argument("--tol", type=float, default=1e-4)
        if name == "verify":
            s.add_argument("--only", nargs="*", default=None)
            s.add_argument("--skip", nargs="*", default=())
    return p


def _effective_config(args):
    raw = load_config(args.config).to_dict()
    for dest, (section, key) in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            raw[section][key] = value
    if args.seed is not None:
        raw["seed"] = args.seed
    if getattr(args, "snapshot_times", None):
        raw["solver"]["snapshot_times"] = list(args.snapshot_times)
    return from_dict(raw)


def _outdir(args) -> Path:
    out = args.out or Path("nlscontrol_out") / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _invariants(traj, c) -> dict:
    return {
        "mass_drift": traj.mass_drift,
        "energy_identity_residual": energy_identity_residual(traj, c),
        "boundary_max_abs": traj.boundary_max,
        "boundary_ok": traj.boundary_max < 1e-8,
    }


def cmd_simulate(args, cfg, out) -> int:
    t0 = time.perf_counter()
    problem, c, notes = build(cfg)
    traj = problem.forward(c)
    io.write_diagnostics(out / "diagnostics.csv", traj)
    write_snapshot(out / "final.nlsc", traj.grid, traj.states[-1])
    for t in cfg.solver.snapshot_times:
        k = int(round(t / c.dt))
        if not 0 <= k <= c.n_steps:
            raise ConfigError(f"snapshot time {t} lies outside [0, {c.horizon}]")
        states = traj.states if traj.stride == 1 else None
        if states is None:
            from .forward import all_states

            states = all_states(traj, c, problem.model, problem.V)
        write_snapshot(out / f"u_t{t:g}.nlsc", traj.grid, states[k])
    cost = problem.evaluate(c).cost
    inv = _invariants(traj, c)
    io.dump_json(
        out / "manifest.json",
        io.manifest("simulate", cfg.to_dict(), cfg.seed, inv, time.perf_counter() - t0,
                    regime=problem.model.regime, warnings=notes, cost=cost.as_dict()),
    )
    print(f"mass drift {inv['mass_drift']:.3e}  energy-identity residual "
          f"{inv['energy_identity_residual']:.3e}  cost {cost.total:.10g}")
    if not inv["boundary_ok"]:
        print(f"note: max|u| near the box edge is {traj.boundary_max:.2e} (>= 1e-8); "
              "consider a larger half_width")
    return 0


def cmd_adjoint(args, cfg, out) -> int:
    t0 = time.perf_counter()
    problem, c, notes = build(cfg)
    traj = problem.forward(c)
    series = evolve_backward(traj, c, problem.model, problem.V, problem.cost, problem.A)
    io.write_pairing_csv(out / "pairing.csv", series)
    io.dump_json(
        out / "manifest.json",
        io.manifest("adjoint", cfg.to_dict(), cfg.seed, _invariants(traj, c),
                    time.perf_counter() - t0, regime=problem.model.regime, warnings=notes),
    )
    print(f"pairing series written: {len(series.g)} nodes, max |g| = {np.max(np.abs(series.g)):.3e}")
    return 0


def cmd_grad_check(args, cfg, out) -> int:
    problem, c, _ = build(cfg)
    rows = gradient_check(problem, c, cfg.seed, n_directions=args.directions)
    report = {"seed": cfg.seed, "config": cfg.to_dict(), "tolerance": args.tol, "directions": rows}
    io.dump_json(out / "gradcheck.json", report)
    if args.json:
        print(json.dumps(io._jsonable(report), indent=2, sort_keys=True))
    else:
        for r in rows:
            print(f"direction {r['direction_id']}: adjoint {r['adjoint_value']:+.10e}  "
                  f"fd {r['richardson']:+.10e}  order {r['order']:.2f}  rel_err {r['rel_err']:.2e}")
    return 0 if all(r["rel_err"] <= args.tol for r in rows) else 2


def cmd_optimize(args, cfg, out) -> int:
    t0 = time.perf_counter()
    problem, c0, notes = build(cfg)
    report = optimize(problem, c0, optimizer_options(cfg))
    c = report.final_control
    io.write_iterates_csv(out / "iterates.csv", report.iterates)
    io.write_control_csv(out / "control.csv", c)
    ev = problem.gradient(c)
    io.write_gradient_csv(out / "gradient.csv", c, ev.gradient, h1_riesz_lift(ev.gradient))
    residual = stationarity_residual(c, ev.pairing, ev.trajectory.omega, problem.cost)
    io.dump_json(
        out / "manifest.json",
        io.manifest("optimize", cfg.to_dict(), cfg.seed, _invariants(ev.trajectory, c),
                    time.perf_counter() - t0, cost=ev.cost.as_dict(), converged=report.converged,
                    stagnated=report.stagnated, failure=report.failure,
                    stationarity_residual=residual, iterations=len(report.iterates) - 1,
                    regime=problem.model.regime, warnings=notes),
    )
    first, last = report.iterates[0]["cost"], report.iterates[-1]["cost"]
    print(f"{len(report.iterates) - 1} iterations: F {first['total']:.6g} -> {last['total']:.6g} "
          f"(terminal {first['terminal']:.4g} -> {last['terminal']:.4g}); "
          f"converged={report.converged} stationarity={residual:.3e}")
    return 2 if report.failure else 0


def cmd_verify(args, cfg, out) -> int:
    vcfg = VerifyConfig(points=cfg.grid.points, half_width=cfg.grid.half_width,
                        horizon=cfg.control.T, n_steps=cfg.control.n_steps,
                        seed=args.seed if args.seed is not None else VerifyConfig.seed,
                        skip=tuple(args.skip))
    reports = run_all(vcfg, names=args.only)
    payload = report_json(reports, vcfg)
    io.dump_json(out / "verify.json", payload)
    if args.json:
        print(json.dumps(io._jsonable(payload), indent=2, sort_keys=True))
    else:
        for r in reports:
            print(r.line() + (f"  ({r.message})" if r.message else ""))
    return 0 if payload["passed"] else 2


COMMANDS = {
    "simulate": cmd_simulate,
    "adjoint": cmd_adjoint,
    "grad-check": cmd_grad_check,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _effective_config(args)
        out = _outdir(args)
        return COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    except (BlowUpError, FloatingPointError, AssertionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
