"""Strang split-step propagation of the controlled NLS and its diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlPath, derivative
from .grid import Grid, State, boundary_amplitude
from .model import ModelParams, _abs_pow

BLOWUP_THRESHOLD = 1e8


class BlowUpError(FloatingPointError):
    """Raised when the field becomes non-finite or exceeds the blow-up guard."""

    def __init__(self, step: int, max_abs: float):
        super().__init__(f"blow-up guard tripped at step {step} (max|u| = {max_abs:.3e})")
        self.step = step
        self.max_abs = max_abs


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Forward solution sampled at the time nodes.

    ``states[j]`` holds u at node ``stored_nodes[j]``; with ``stride == 1``
    every node is stored. ``mass`` is the L2 norm (not squared).
    """

    grid: Grid
    dt: float
    n_steps: int
    stride: int
    stored_nodes: np.ndarray
    states: np.ndarray | None
    mass: np.ndarray
    omega: np.ndarray
    energy: np.ndarray
    boundary_max: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def final(self) -> State:
        if self.states is None:
            raise ValueError("trajectory was run without state storage")
        return State(self.grid, self.states[-1])

    def state(self, k: int) -> State:
        if self.states is None or self.stride != 1:
            raise ValueError("node states are only directly available with stride 1")
        return State(self.grid, self.states[k])

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass - self.mass[0])) / self.mass[0])


def _energy_raw(g: Grid, u: np.ndarray, phi_t: float, model: ModelParams, V: np.ndarray) -> float:
    power = np.abs(np.fft.fftn(u)) ** 2
    grad2 = g.cell_volume / g.size * np.sum(g.k2 * power)
    a2 = np.abs(u) ** 2
    potential = g.cell_volume * np.sum(a2 ** (model.sigma + 1.0))
    omega = g.cell_volume * np.sum(V * a2)
    return float(0.5 * grad2 - model.lam / (2 * model.sigma + 2) * potential - 0.5 * phi_t * omega)


def energy(s: State, phi_t: float, model: ModelParams, V: np.ndarray) -> float:
    return _energy_raw(s.grid, s.values, phi_t, model, np.asarray(V))


def kinetic_propagator(g: Grid, dt: float) -> np.ndarray:
    return np.exp(-1j * g.k2 * dt)


def _local_phase(u, phi_mid, h, model, V):
    return u * np.exp(1j * h * (model.lam * _abs_pow(u, 2 * model.sigma) + phi_mid * V))


def _step(u, phi_mid, dt, model, V, kin):
    u = _local_phase(u, phi_mid, 0.5 * dt, model, V)
    u = np.fft.ifftn(np.fft.fftn(u) * kin)
    return _local_phase(u, phi_mid, 0.5 * dt, model, V)


def strang_step(s: State, phi_mid: float, dt: float, model: ModelParams, V: np.ndarray) -> State:
    """One Strang step: half local phase, full kinetic step, half local phase.

    A negative ``dt`` steps backward in time.
    """
    kin = kinetic_propagator(s.grid, dt)
    return State(s.grid, _step(s.values, phi_mid, dt, model, np.asarray(V), kin))


def _guard(u, k, threshold):
    m = np.max(np.abs(u))
    if not np.isfinite(m) or m > threshold:
        raise BlowUpError(k, float(m))


def evolve(
    u0: State,
    c: ControlPath,
    model: ModelParams,
    V: np.ndarray,
    *,
    stride: int = 1,
    store_states: bool = True,
    blowup_threshold: float = BLOWUP_THRESHOLD,
) -> Trajectory:
    """Propagate ``u0`` over ``[0, T]`` under control ``c``.

    Diagnostics (mass, omega, energy) are recorded at every node. States are
    kept every ``stride`` nodes plus the final node; ``store_states=False``
    keeps only the final state.
    """
    g = u0.grid
    V = np.asarray(V, dtype=float)
    if V.shape != g.shape:
        raise ValueError(f"potential shape {V.shape} does not match grid {g.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n, dt = c.n_steps, c.dt
    kin = kinetic_propagator(g, dt)
    phi_mid = c.midpoints
    vol = g.cell_volume

    if store_states:
        stored = np.unique(np.r_[np.arange(0, n + 1, stride), n])
    else:
        stored = np.array([n])
    slot = {int(k): j for j, k in enumerate(stored)}
    states = np.empty((len(stored),) + g.shape, dtype=complex)
    mass = np.empty(n + 1)
    omega = np.empty(n + 1)
    E = np.empty(n + 1)

    u = np.array(u0.values)
    for k in range(n + 1):
        if k > 0:
            u = _step(u, phi_mid[k - 1], dt, model, V, kin)
            _guard(u, k, blowup_threshold)
        a2 = np.abs(u) ** 2
        mass[k] = np.sqrt(vol * np.sum(a2))
        omega[k] = vol * np.sum(V * a2)
        E[k] = _energy_raw(g, u, c.nodes[k], model, V)
        if k in slot:
            states[slot[k]] = u
    bmax = boundary_amplitude(State(g, u))
    states.setflags(write=False)
    return Trajectory(g, dt, n, stride if store_states else 0, stored, states, mass, omega, E, bmax)


def recompute_segment(
    traj: Trajectory, c: ControlPath, model: ModelParams, V: np.ndarray, k0: int, k1: int
) -> np.ndarray:
    """States at nodes ``k0..k1`` rebuilt from the checkpoint at ``k0``."""
    where = np.flatnonzero(traj.stored_nodes == k0)
    if traj.states is None or where.size == 0:
        raise ValueError(
            f"node {k0} is not a stored checkpoint; rerun evolve with store_states=True "
            "and a stride that divides the interval (checkpoint mode)"
        )
    kin = kinetic_propagator(traj.grid, traj.dt)
    phi_mid = c.midpoints
    out = np.empty((k1 - k0 + 1,) + traj.grid.shape, dtype=complex)
    u = traj.states[where[0]]
    out[0] = u
    for j, k in enumerate(range(k0, k1), start=1):
        u = _step(u, phi_mid[k], traj.dt, model, V, kin)
        out[j] = u
    return out


def all_states(traj: Trajectory, c: ControlPath, model: ModelParams, V: np.ndarray) -> np.ndarray:
    """Every node state, recomputing between checkpoints when ``stride > 1``."""
    if traj.states is None or traj.stride == 0:
        raise ValueError(
            "trajectory has no stored states; rerun evolve with store_states=True "
            "(use stride > 1 for checkpoint mode on large runs)"
        )
    if traj.stride == 1:
        return traj.states
    out = np.empty((traj.n_steps + 1,) + traj.grid.shape, dtype=complex)
    nodes = traj.stored_nodes
    for a, b in zip(nodes[:-1], nodes[1:]):
        out[a : b + 1] = recompute_segment(traj, c, model, V, int(a), int(b))
    return out


def energy_identity_residual(traj: Trajectory, c: ControlPath) -> float:
    """``E(T) - E(0) + 1/2 * sum dt * phi' * omega_mid``.

    The energy decreases at rate ``phi'(t) * omega(t) / 2``; the residual
    vanishes at second order in ``dt``.
    """
    omega_mid = 0.5 * (traj.omega[1:] + traj.omega[:-1])
    work = 0.5 * c.dt * np.sum(derivative(c) * omega_mid)
    return float(traj.energy[-1] - traj.energy[0] + work)
