"""Gradient assembly over piecewise-linear hat functions, H1 lift and FD probes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .adjoint import PairingSeries
from .control import ControlPath, derivative
from .objective import CostParams, nodal_midpoints


@dataclass(frozen=True, eq=False)
class GradientPath:
    """Derivative of the reduced cost with respect to nodes ``1..n_steps``.

    ``nodes[k-1]`` is ``dF/dphi_k``, i.e. the cost gradient tested against
    the hat function of node ``k``. Node 0 is pinned and carries no entry.
    """

    nodes: np.ndarray
    dt: float
    horizon: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if not np.all(np.isfinite(nodes)):
            raise ValueError("gradient contains non-finite entries")
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_steps(self) -> int:
        return self.nodes.size

    def pair(self, direction: ControlPath | np.ndarray) -> float:
        """Action on a direction with zero initial node."""
        d = direction.nodes if isinstance(direction, ControlPath) else np.asarray(direction)
        if d.size == self.n_steps + 1:
            if d[0] != 0.0:
                raise ValueError("directions must vanish at t = 0")
            d = d[1:]
        return float(np.dot(self.nodes, d))


def hat_integrals(values: np.ndarray, dt: float) -> np.ndarray:
    """Exact integrals of a nodal P1 function against hats ``1..n``."""
    v = np.asarray(values, dtype=float)
    out = np.empty(v.size - 1)
    out[:-1] = dt / 6.0 * (v[:-2] + 4.0 * v[1:-1] + v[2:])
    out[-1] = dt / 6.0 * (v[-2] + 2.0 * v[-1])
    return out


def flux_weight(c: ControlPath, omega: np.ndarray, p: CostParams) -> np.ndarray:
    """``gamma2 + gamma1 * omega_mid^2`` on each interval."""
    return p.gamma2 + p.gamma1 * nodal_midpoints(omega) ** 2


def flux_term(c: ControlPath, omega: np.ndarray, p: CostParams) -> np.ndarray:
    """``int phi' (gamma2 + gamma1 omega^2) eta_k'`` for ``k = 1..n``."""
    flux = derivative(c) * flux_weight(c, omega, p)
    out = np.empty(c.n_steps)
    out[:-1] = flux[:-1] - flux[1:]
    out[-1] = flux[-1]
    return out


def assemble_gradient(
    g: PairingSeries, c: ControlPath, omega: np.ndarray, p: CostParams
) -> GradientPath:
    """Weak-form gradient tested against hats vanishing at ``t = 0``.

    The state contribution is ``-Re int conj(p) V u`` with the adjoint
    ``p`` of :func:`nlscontrol.adjoint.evolve_backward`; the control
    contribution ``-2 d/dt(phi' (gamma2 + gamma1 omega^2))`` is integrated by
    parts onto the hats, which keeps the natural boundary term at ``T``.
    """
    series = np.asarray(g.g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if series.shape != (c.n_steps + 1,) or omega.shape != (c.n_steps + 1,):
        raise ValueError(
            f"pairing ({series.size}) and omega ({omega.size}) must have {c.n_steps + 1} nodes"
        )
    grad = -hat_integrals(series, c.dt) + 2.0 * flux_term(c, omega, p)
    return GradientPath(grad, c.dt, c.horizon)


def h1_system(n: int, dt: float) -> np.ndarray:
    """Banded (lumped mass + stiffness) matrix on nodes ``1..n``, Neumann at T."""
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / dt
    ab[2, :-1] = -1.0 / dt
    ab[1, :] = dt + 2.0 / dt
    ab[1, -1] = 0.5 * dt + 1.0 / dt
    return ab


def h1_riesz_lift(gr: GradientPath) -> GradientPath:
    """Solve ``(M + K) h = grad``: the H1(0,T) representer with ``h(0) = 0``."""
    ab = h1_system(gr.n_steps, gr.dt)
    assert np.all(ab[1] > 0), "H1 system is singular"
    h = solve_banded((1, 1), ab, gr.nodes)
    return GradientPath(h, gr.dt, gr.horizon)


def dual_norm(gr: GradientPath) -> float:
    """H1-dual norm of ``gr``, equal to ``sqrt(<grad, lift(grad)>)``."""
    return float(np.sqrt(max(gr.pair(h1_riesz_lift(gr).nodes), 0.0)))


@dataclass(frozen=True)
class FDResult:
    eps: tuple
    values: tuple
    richardson: float
    order: float


def fd_directional(F, c: ControlPath, direction: ControlPath, eps_list=(4e-3, 2e-3, 1e-3)) -> FDResult:
    """Central differences of ``F`` along ``direction`` for each step in ``eps_list``.

    The last two estimates are Richardson-combined assuming an ``eps^2``
    error; the observed order comes from the last three (requires a
    geometric sweep).
    """
    if direction.nodes[0] != 0.0:
        raise ValueError("FD directions must vanish at t = 0")
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 2:
        raise ValueError("need at least two step sizes")
    if not np.any(direction.nodes):
        return FDResult(eps, (0.0,) * len(eps), 0.0, float("nan"))
    vals = []
    for e in eps:
        plus = F(c.with_nodes(c.nodes + e * direction.nodes))
        minus = F(c.with_nodes(c.nodes - e * direction.nodes))
        vals.append((plus - minus) / (2.0 * e))
    e1, e2 = eps[-2], eps[-1]
    d1, d2 = vals[-2], vals[-1]
    rich = (e1**2 * d2 - e2**2 * d1) / (e1**2 - e2**2)
    order = float("nan")
    if len(vals) >= 3:
        diff_a, diff_b = abs(vals[-3] - vals[-2]), abs(vals[-2] - vals[-1])
        if diff_a > 0 and diff_b > 0:
            order = float(np.log(diff_a / diff_b) / np.log(eps[-3] / eps[-2]))
    return FDResult(eps, tuple(float(v) for v in vals), float(rich), order)


def random_direction(c: ControlPath, rng: np.random.Generator, modes: int = 4) -> ControlPath:
    """Smooth random direction ``sum_j a_j sin((j - 1/2) pi t / T)``; zero at t = 0."""
    t = c.times / c.horizon
    a = rng.standard_normal(modes) / np.arange(1, modes + 1)
    values = sum(a[j] * np.sin((j + 0.5) * np.pi * t) for j in range(modes))
    return ControlPath(c.horizon, c.n_steps, values, 0.0)
