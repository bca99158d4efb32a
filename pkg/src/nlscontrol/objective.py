"""Cost functional: terminal localization, physical work and control penalty."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .control import AdmissibilityBounds, ControlPath, derivative
from .forward import Trajectory
from .grid import State, inner_product
from .model import ObservableSpec


@dataclass(frozen=True)
class CostParams:
    gamma1: float = 0.0
    gamma2: float = 1e-2
    observable: ObservableSpec = field(default_factory=ObservableSpec)
    bounds: AdmissibilityBounds = field(default_factory=AdmissibilityBounds)

    def __post_init__(self):
        if not self.gamma1 >= 0:
            raise ValueError(f"gamma1 must be >= 0, got {self.gamma1}")
        if not self.gamma2 > 0:
            raise ValueError(f"gamma2 must be > 0 (strictly), got {self.gamma2}")


@dataclass(frozen=True)
class CostBreakdown:
    terminal: float
    work: float
    penalty: float

    @property
    def total(self) -> float:
        return self.terminal + self.work + self.penalty

    def as_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


def observable_expectation(uT: State, A: np.ndarray) -> float:
    """Re <uT, A uT>; the imaginary part must vanish for a real weight."""
    z = inner_product(uT, State(uT.grid, A * uT.values))
    if abs(z.imag) >= 1e-10 * max(1.0, abs(z.real)):
        raise AssertionError(f"<u, A u> has imaginary part {z.imag:.3e}; observable is not self-adjoint")
    return z.real


def terminal_term(uT: State, A: np.ndarray) -> float:
    return observable_expectation(uT, A) ** 2


def nodal_midpoints(series: np.ndarray) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    return 0.5 * (series[1:] + series[:-1])


def work_term(c: ControlPath, omega: np.ndarray, gamma1: float) -> float:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (c.n_steps + 1,):
        raise ValueError(f"omega has length {omega.size}, control has {c.n_steps + 1} nodes")
    return float(gamma1 * c.dt * np.sum((derivative(c) * nodal_midpoints(omega)) ** 2))


def penalty_term(c: ControlPath, gamma2: float) -> float:
    return float(gamma2 * c.dt * np.sum(derivative(c) ** 2))


def evaluate(traj: Trajectory, c: ControlPath, p: CostParams, A: np.ndarray) -> CostBreakdown:
    if traj.n_steps != c.n_steps or not np.isclose(traj.dt, c.dt, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"trajectory (n={traj.n_steps}, dt={traj.dt}) does not match control "
            f"(n={c.n_steps}, dt={c.dt})"
        )
    return CostBreakdown(
        terminal=terminal_term(traj.final, A),
        work=work_term(c, traj.omega, p.gamma1),
        penalty=penalty_term(c, p.gamma2),
    )
