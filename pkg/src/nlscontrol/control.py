"""Piecewise-linear controls on [0, T] with a pinned initial value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdmissibilityBounds:
    m1: float = 10.0
    m2: float = 10.0

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0):
            raise ValueError(f"admissibility bounds must be positive, got M1={self.m1}, M2={self.m2}")


@dataclass(frozen=True, eq=False)
class ControlPath:
    """Nodal control values ``phi_k`` at ``t_k = k*T/n_steps``."""

    horizon: float
    n_steps: int
    nodes: np.ndarray
    phi0: float

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.shape != (self.n_steps + 1,):
            raise ValueError(f"expected {self.n_steps + 1} nodes, got shape {nodes.shape}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("control contains non-finite nodes")
        if nodes[0] != self.phi0:
            raise ValueError(f"node 0 ({nodes[0]}) differs from phi0 ({self.phi0})")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """Interval-midpoint values used by the time stepper."""
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.nodes)

    def with_nodes(self, nodes) -> ControlPath:
        return ControlPath(self.horizon, self.n_steps, nodes, self.phi0)

    def __add__(self, other: ControlPath) -> ControlPath:
        return self.with_nodes(self.nodes + other.nodes)


def _check_phi0(phi0: float, bounds: AdmissibilityBounds | None) -> None:
    if bounds is not None and abs(phi0) > bounds.m2:
        raise ValueError(f"|phi0|={abs(phi0)} exceeds admissibility bound M2={bounds.m2}")


def make_control(
    T: float,
    n_steps: int,
    phi0: float,
    profile="constant",
    *,
    amplitude: float = 1.0,
    bounds: AdmissibilityBounds | None = None,
) -> ControlPath:
    """Build a control path.

    ``profile`` may be a nodal array of length ``n_steps + 1``, a callable of
    ``t``, or one of the named shapes ``constant`` (``phi0``), ``ramp``
    (``phi0 + amplitude*t/T``) and ``sine`` (``phi0 + amplitude*sin(pi t/T)``).
    Node 0 is always overwritten with ``phi0``.
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    _check_phi0(phi0, bounds)
    t = np.linspace(0.0, T, n_steps + 1)
    if isinstance(profile, str):
        if profile == "constant":
            nodes = np.full_like(t, phi0)
        elif profile == "ramp":
            nodes = phi0 + amplitude * t / T
        elif profile == "sine":
            nodes = phi0 + amplitude * np.sin(np.pi * t / T)
        else:
            raise ValueError(f"unknown control shape {profile!r}")
    elif callable(profile):
        nodes = np.asarray(profile(t), dtype=float) * np.ones_like(t)
    else:
        nodes = np.array(profile, dtype=float)
        if nodes.shape != t.shape:
            raise ValueError(f"profile has {nodes.size} nodes, expected {t.size}")
    if np.any(np.isnan(nodes)):
        raise ValueError("control profile contains NaN")
    nodes = nodes.copy()
    nodes[0] = phi0
    return ControlPath(float(T), int(n_steps), nodes, float(phi0))


def derivative(c: ControlPath) -> np.ndarray:
    """Slopes on each interval (length ``n_steps``)."""
    return np.diff(c.nodes) / c.dt


def h1_norm(c: ControlPath) -> float:
    return float(np.sqrt(l2_norm(c) ** 2 + c.dt * np.sum(derivative(c) ** 2)))


def l2_norm(c: ControlPath) -> float:
    sq = c.nodes**2
    return float(np.sqrt(c.dt * (np.sum(sq) - 0.5 * (sq[0] + sq[-1]))))


def pin_initial(c: ControlPath, phi0: float, bounds: AdmissibilityBounds | None = None) -> ControlPath:
    _check_phi0(phi0, bounds)
    nodes = c.nodes.copy()
    nodes[0] = phi0
    return ControlPath(c.horizon, c.n_steps, nodes, float(phi0))


def direction(T: float, n_steps: int, values) -> ControlPath:
    """Perturbation direction with a zero initial node."""
    return make_control(T, n_steps, 0.0, values)
