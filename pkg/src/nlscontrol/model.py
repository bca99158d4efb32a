"""Potential, observable and nonlinearity of the controlled NLS model."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .grid import Grid, State

FOCUSING_OK = "focusing_ok"
DEFOCUSING_OK = "defocusing_ok"
OUTSIDE_THEOREMS = "outside_theorems"


class TheoremRangeWarning(UserWarning):
    """Model parameters lie outside the ranges covered by the existence theory."""


@dataclass(frozen=True)
class PotentialSpec:
    """Control potential ``V``.

    ``kind`` is one of ``inverse_power``, ``gaussian_well``, ``uniform`` or
    ``from_file``. For ``inverse_power`` an ``epsilon`` of ``None`` means one
    grid spacing.
    """

    kind: str = "inverse_power"
    alpha: float = 0.5
    epsilon: float | None = None
    depth: float = 1.0
    width: float = 1.0
    value: float = 0.0
    path: str | None = None

    def validate(self) -> list[str]:
        errors = []
        if self.kind == "inverse_power":
            if not 0.0 < self.alpha < 1.0:
                errors.append(f"potential.alpha must lie in (0, 1), got {self.alpha}")
            if self.epsilon is not None and not self.epsilon > 0:
                errors.append(f"potential.epsilon must be positive, got {self.epsilon}")
        elif self.kind == "gaussian_well":
            if not self.width > 0:
                errors.append(f"potential.width must be positive, got {self.width}")
        elif self.kind == "uniform":
            pass
        elif self.kind == "from_file":
            if not self.path:
                errors.append("potential.path is required for kind 'from_file'")
        else:
            errors.append(f"unknown potential kind {self.kind!r}")
        return errors


@dataclass(frozen=True)
class ObservableSpec:
    """Smooth bump ``amplitude * exp(1 - 1/(1 - |x/R|^2))`` supported in B(R)."""

    radius: float = 2.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class ModelParams:
    lam: float
    sigma: float
    dim: int = 1
    regime: str | None = None
    gateaux_ok: bool | None = None


def make_potential(spec: PotentialSpec, g: Grid) -> np.ndarray:
    errors = spec.validate()
    if errors:
        raise ValueError("; ".join(errors))
    if spec.kind == "inverse_power":
        eps = g.dx if spec.epsilon is None else spec.epsilon
        return (g.radius**2 + eps**2) ** (-spec.alpha / 2.0)
    if spec.kind == "gaussian_well":
        return spec.depth * np.exp(-(g.radius**2) / spec.width**2)
    if spec.kind == "uniform":
        return np.full(g.shape, float(spec.value))
    return _load_field(Path(spec.path), g)


def _load_field(path: Path, g: Grid) -> np.ndarray:
    from .grid import read_snapshot

    if not path.is_file():
        raise ValueError(f"cannot read potential file {path}")
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        try:
            values = np.array([float(r[-1]) for r in rows[1:]])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed potential CSV ({exc})") from None
        if values.size != g.size:
            raise ValueError(f"{path}: {values.size} samples, grid needs {g.size}")
        field = values.reshape(g.shape)
    else:
        snap = read_snapshot(path)
        if snap.grid != g:
            raise ValueError(f"{path}: snapshot grid {snap.grid} does not match {g}")
        field = snap.values.real.copy()
    if not np.all(np.isfinite(field)):
        raise ValueError(f"{path}: potential contains non-finite samples")
    return field


def make_observable(spec: ObservableSpec, g: Grid) -> np.ndarray:
    if not 0 < spec.radius < g.half_width:
        raise ValueError(
            f"observable radius R={spec.radius} must be positive and below half_width={g.half_width}"
        )
    s = (g.radius / spec.radius) ** 2
    w = np.zeros(g.shape)
    inside = s < 1.0
    w[inside] = spec.amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return w


def validate_model(p: ModelParams) -> ModelParams:
    """Tag ``p`` with its theorem regime and whether the gradient theory applies.

    Parameters outside the covered ranges are allowed; a
    :class:`TheoremRangeWarning` is emitted and the regime is
    ``outside_theorems``.
    """
    if not p.sigma > 0:
        raise ValueError(f"sigma must be positive, got {p.sigma}")
    if p.dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {p.dim}")
    upper_defocusing = np.inf if p.dim <= 2 else 2.0 / (p.dim - 2)
    if p.lam < 0 and p.sigma < upper_defocusing:
        regime = DEFOCUSING_OK
    elif p.lam > 0 and p.sigma < 2.0 / p.dim:
        regime = FOCUSING_OK
    else:
        regime = OUTSIDE_THEOREMS
    # without the nonlinearity sigma plays no role and the cost is smooth in phi
    gateaux_ok = p.lam == 0 or (regime != OUTSIDE_THEOREMS and p.sigma >= 0.5)
    if regime == OUTSIDE_THEOREMS:
        warnings.warn(
            f"lambda={p.lam}, sigma={p.sigma}, N={p.dim} lies outside the existence ranges; "
            "the solver runs but blow-up is possible",
            TheoremRangeWarning,
            stacklevel=2,
        )
    return replace(p, regime=regime, gateaux_ok=gateaux_ok)


def nonlinear_term(s: State, p: ModelParams) -> State:
    return State(s.grid, p.lam * _abs_pow(s.values, 2 * p.sigma) * s.values)


def _abs_pow(u: np.ndarray, exponent: float) -> np.ndarray:
    a = np.abs(u)
    if exponent == 2.0:
        return a * a
    return a**exponent


def conjugate_coefficient(u: np.ndarray, p: ModelParams) -> np.ndarray:
    """``sigma * lam * |u|^(2 sigma - 2) * u^2``, set to 0 where ``u == 0``."""
    a2 = np.abs(u) ** 2
    out = np.zeros_like(u, dtype=complex)
    nz = a2 > 0
    out[nz] = p.sigma * p.lam * a2[nz] ** (p.sigma - 1.0) * u[nz] ** 2
    return out
