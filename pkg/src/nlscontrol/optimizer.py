"""H1 steepest descent with Armijo backtracking on the reduced cost."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adjoint import PairingSeries
from .control import ControlPath
from .forward import BlowUpError
from .gradient import GradientPath, dual_norm, flux_term, h1_riesz_lift, hat_integrals
from .grid import norms
from .objective import CostParams
from .problem import ControlProblem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizeOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 40
    # >1 starts each line search at step_growth * (last accepted step)
    step_growth: float = 1.0
    max_step: float = 1e6


@dataclass
class OptimizeReport:
    iterates: list = field(default_factory=list)
    final_control: ControlPath | None = None
    converged: bool = False
    stagnated: bool = False
    failure: str | None = None
    stationarity: float = float("nan")
    baseline: dict | None = None

    def costs(self) -> np.ndarray:
        return np.array([it["cost"]["total"] for it in self.iterates])


def stationarity_residual(c: ControlPath, g: PairingSeries, omega: np.ndarray, p: CostParams) -> float:
    """H1-dual norm of the weak residual of the optimality ODE.

    The ODE ``d/dt(phi' (gamma2 + gamma1 omega^2)) = -1/2 Re int conj(p) V u``
    with ``phi(0) = phi0`` and ``phi'(T) = 0`` is tested against hats ``1..n``;
    the natural condition at ``T`` is carried by the last hat. The result is
    exactly half the dual norm of the assembled gradient.
    """
    r = flux_term(c, omega, p) - 0.5 * hat_integrals(g.g, c.dt)
    return dual_norm(GradientPath(r, c.dt, c.horizon))


def _record(it: int, ev, gnorm: float, step: float) -> dict:
    return {"iter": it, "cost": ev.cost.as_dict(), "grad_h1": gnorm, "step": step}


def optimize(problem: ControlProblem, c0: ControlPath, opts: OptimizeOptions | None = None) -> OptimizeReport:
    opts = opts or OptimizeOptions()
    bounds = problem.cost.bounds
    if abs(c0.phi0) > bounds.m2:
        raise ValueError(f"|phi0|={abs(c0.phi0)} exceeds M2={bounds.m2}")
    h1 = norms(problem.u0)["h1"]
    if h1 > bounds.m1:
        warnings.warn(f"||u0||_H1 = {h1:.4g} exceeds M1 = {bounds.m1}", stacklevel=2)

    report = OptimizeReport()
    c = c0
    step = opts.initial_step
    try:
        ev = problem.gradient(c)
    except BlowUpError as exc:
        report.failure = f"forward blow-up at initial control: {exc}"
        report.final_control = c
        return report

    for it in range(opts.max_iters + 1):
        lift = h1_riesz_lift(ev.gradient)
        slope = ev.gradient.pair(lift.nodes)
        gnorm = float(np.sqrt(max(slope, 0.0)))
        report.iterates.append(_record(it, ev, gnorm, 0.0 if it == 0 else step))
        log.info("iter %d  F=%.10g  |grad|_H1=%.3e", it, ev.cost.total, gnorm)
        if gnorm <= opts.grad_tol:
            report.converged = True
            break
        if it == opts.max_iters:
            break

        f0 = ev.cost.total
        t = min(step * opts.step_growth, opts.max_step) if it else opts.initial_step
        accepted = None
        for _ in range(opts.max_backtracks):
            trial = c.with_nodes(np.r_[c.nodes[0], c.nodes[1:] - t * lift.nodes])
            try:
                f_trial = problem.total(trial)
            except BlowUpError:
                f_trial = np.inf
            if f_trial <= f0 - opts.armijo_c1 * t * slope:
                accepted = trial
                break
            t *= opts.backtrack
        if accepted is None:
            report.stagnated = True
            break
        try:
            ev = problem.gradient(accepted)
        except BlowUpError as exc:
            report.failure = f"forward blow-up at iterate {it + 1}: {exc}"
            break
        step = t
        c = accepted
        if ev.cost.total > f0 - opts.armijo_c1 * t * slope:
            raise AssertionError("accepted iterate violates the Armijo condition")

    report.final_control = c
    if ev.pairing is not None:
        report.stationarity = stationarity_residual(c, ev.pairing, ev.trajectory.omega, problem.cost)
    return report
