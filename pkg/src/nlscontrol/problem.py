"""Reduced cost ``phi -> F(u(phi), phi)`` and its adjoint gradient."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .adjoint import PairingSeries, evolve_backward
from .control import ControlPath
from .forward import BLOWUP_THRESHOLD, Trajectory, evolve
from .gradient import GradientPath, assemble_gradient
from .grid import State
from .model import ModelParams, make_observable
from .objective import CostBreakdown, CostParams, evaluate


@dataclass(frozen=True, eq=False)
class Evaluation:
    control: ControlPath
    trajectory: Trajectory
    cost: CostBreakdown
    pairing: PairingSeries | None = None
    gradient: GradientPath | None = None


@dataclass(frozen=True, eq=False)
class ControlProblem:
    u0: State
    model: ModelParams
    V: np.ndarray
    cost: CostParams
    stride: int = 1
    blowup_threshold: float = BLOWUP_THRESHOLD

    @cached_property
    def A(self) -> np.ndarray:
        return make_observable(self.cost.observable, self.u0.grid)

    def forward(self, c: ControlPath, store_states: bool = True) -> Trajectory:
        return evolve(
            self.u0,
            c,
            self.model,
            self.V,
            stride=self.stride,
            store_states=store_states,
            blowup_threshold=self.blowup_threshold,
        )

    def evaluate(self, c: ControlPath) -> Evaluation:
        traj = self.forward(c, store_states=False)
        return Evaluation(c, traj, evaluate(traj, c, self.cost, self.A))

    def total(self, c: ControlPath) -> float:
        return self.evaluate(c).cost.total

    def gradient(self, c: ControlPath) -> Evaluation:
        traj = self.forward(c)
        pairing = evolve_backward(traj, c, self.model, self.V, self.cost, self.A)
        grad = assemble_gradient(pairing, c, traj.omega, self.cost)
        return Evaluation(c, traj, evaluate(traj, c, self.cost, self.A), pairing, grad)
