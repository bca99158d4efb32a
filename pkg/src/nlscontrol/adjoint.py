"""Backward integration of the linearized adjoint equation.

The adjoint field ``p`` solves

    i p_t + lap p + phi V p + lam (sigma+1) |u|^(2 sigma) p
        + lam sigma |u|^(2 sigma - 2) u^2 conj(p) = 4 gamma1 phi'^2 omega V u,

    p(T) = 4i Re<u(T), A u(T)> A u(T),

backward from ``T``. The equation is only real-linear in ``p`` because of the
``conj(p)`` term, so the pointwise part is integrated explicitly rather than
by a phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlPath, derivative
from .forward import Trajectory, all_states, kinetic_propagator
from .grid import State
from .model import ModelParams, _abs_pow, conjugate_coefficient, make_observable
from .objective import CostParams, observable_expectation


@dataclass(frozen=True, eq=False)
class PairingSeries:
    """``g_k = Re int conj(p(t_k)) V u(t_k) dx`` at every node."""

    times: np.ndarray
    g: np.ndarray
    snapshots: np.ndarray | None = None


def terminal_condition(uT: State, A: np.ndarray) -> State:
    expectation = observable_expectation(uT, A)
    return State(uT.grid, 4j * expectation * (A * uT.values))


def node_slopes(c: ControlPath) -> np.ndarray:
    """phi'(t_k): mean of adjacent interval slopes, one-sided at the ends."""
    s = derivative(c)
    out = np.empty(c.n_steps + 1)
    out[0], out[-1] = s[0], s[-1]
    out[1:-1] = 0.5 * (s[1:] + s[:-1])
    return out


def adjoint_source(
    k: int, c: ControlPath, omega: np.ndarray, u_k: State, V: np.ndarray, gamma1: float
) -> State:
    slope = node_slopes(c)[k]
    return State(u_k.grid, 4.0 * gamma1 * slope**2 * omega[k] * np.asarray(V) * u_k.values)


def evolve_backward(
    traj: Trajectory,
    c: ControlPath,
    model: ModelParams,
    V: np.ndarray,
    p: CostParams,
    A: np.ndarray | None = None,
    *,
    keep_snapshots: bool = False,
    terminal: np.ndarray | None = None,
    source_scale: float = 1.0,
) -> PairingSeries:
    """Integrate the adjoint from ``T`` to ``0`` along ``traj``.

    Each interval is a Strang step: backward kinetic half-step, a classical
    RK4 step of the pointwise real-linear system with ``u`` frozen at the
    interval midpoint (source included), backward kinetic half-step.

    ``terminal`` and ``source_scale`` override the terminal data and scale
    the running source; they exist for linearity checks.
    """
    if model.gateaux_ok is False:
        raise ValueError(
            f"sigma={model.sigma}, lambda={model.lam} is outside the differentiable regime "
            "(need sigma >= 1/2 inside the existence range)"
        )
    g = traj.grid
    V = np.asarray(V, dtype=float)
    if A is None:
        A = make_observable(p.observable, g)
    states = all_states(traj, c, model, V)
    n, dt = c.n_steps, c.dt
    vol = g.cell_volume
    kin_half = kinetic_propagator(g, -0.5 * dt)
    slopes = derivative(c)
    phi_mid = c.midpoints
    h = -dt

    if terminal is None:
        q = terminal_condition(State(g, states[-1]), A).values.copy()
    else:
        q = np.array(terminal, dtype=complex).reshape(g.shape)

    pairing = np.empty(n + 1)
    pairing[n] = vol * np.real(np.vdot(q, V * states[n]))
    snaps = np.empty((n + 1,) + g.shape, dtype=complex) if keep_snapshots else None
    if snaps is not None:
        snaps[n] = q

    omega = traj.omega
    for k in range(n - 1, -1, -1):
        u_mid = 0.5 * (states[k] + states[k + 1])
        a = phi_mid[k] * V + model.lam * (model.sigma + 1.0) * _abs_pow(u_mid, 2 * model.sigma)
        cc = conjugate_coefficient(u_mid, model)
        if p.gamma1 and slopes[k]:
            src = (
                source_scale
                * 4.0
                * p.gamma1
                * slopes[k] ** 2
                * 0.5
                * V
                * (omega[k] * states[k] + omega[k + 1] * states[k + 1])
            )
            isrc = 1j * src
        else:
            isrc = 0.0

        def rhs(y):
            return 1j * (a * y + cc * np.conj(y)) - isrc

        q = np.fft.ifftn(np.fft.fftn(q) * kin_half)
        k1 = rhs(q)
        k2 = rhs(q + 0.5 * h * k1)
        k3 = rhs(q + 0.5 * h * k2)
        k4 = rhs(q + h * k3)
        q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        q = np.fft.ifftn(np.fft.fftn(q) * kin_half)

        if not np.all(np.isfinite(q)):
            raise FloatingPointError(f"adjoint became non-finite at step {k}")
        pairing[k] = vol * np.real(np.vdot(q, V * states[k]))
        if snaps is not None:
            snaps[k] = q

    return PairingSeries(c.times, pairing, snaps)
