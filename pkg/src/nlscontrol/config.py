"""YAML run configuration: schema, defaults, validation and model construction."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .control import AdmissibilityBounds, ControlPath, make_control
from .grid import State, make_grid, read_snapshot
from .model import (
    ModelParams,
    ObservableSpec,
    PotentialSpec,
    TheoremRangeWarning,
    make_potential,
    validate_model,
)
from .objective import CostParams
from .optimizer import OptimizeOptions
from .problem import ControlProblem


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors) if not isinstance(errors, str) else [errors]
        super().__init__("; ".join(self.errors))


@dataclass
class GridConfig:
    dim: int = 1
    points: int = 256
    half_width: float = 10.0


@dataclass
class ModelConfig:
    lam: float = 1.0
    sigma: float = 1.0


@dataclass
class PotentialConfig:
    kind: str = "inverse_power"
    alpha: float = 0.5
    epsilon: float | None = None
    depth: float = 1.0
    width: float = 1.0
    value: float = 0.0
    path: str | None = None


@dataclass
class ObservableConfig:
    radius: float = 2.0
    amplitude: float = 1.0


@dataclass
class InitialConfig:
    """Gaussian ``amplitude * exp(-((x - center)/width)^2)`` or an NLSC file."""

    kind: str = "gaussian"
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    path: str | None = None


@dataclass
class ControlConfig:
    T: float = 1.0
    n_steps: int = 1000
    phi0: float = 0.0
    shape: str = "constant"
    amplitude: float = 1.0
    path: str | None = None


@dataclass
class CostConfig:
    gamma1: float = 0.0
    gamma2: float = 1e-2


@dataclass
class BoundsConfig:
    M1: float = 10.0
    M2: float = 10.0


@dataclass
class SolverConfig:
    stride: int = 1
    blowup_guard: float = 1e8
    snapshot_times: list = field(default_factory=list)


@dataclass
class OptimizerConfig:
    max_iters: int = 200
    grad_tol: float = 1e-6
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 40


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    observable: ObservableConfig = field(default_factory=ObservableConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"]["lambda"] = d["model"].pop("lam")
        return d


# YAML spelling -> dataclass attribute
_ALIASES = {"model": {"lambda": "lam"}}


def _section(name, cls, raw, errors):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        errors.append(f"{name}: expected a mapping, got {type(raw).__name__}")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        attr = _ALIASES.get(name, {}).get(key, key)
        if attr not in known:
            errors.append(f"{name}.{key}: unknown key")
            continue
        kwargs[attr] = value
    return cls(**kwargs)


def from_dict(raw: dict) -> RunConfig:
    """Build and validate a config; raises :class:`ConfigError` listing every problem."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level of the config must be a mapping")
    errors = []
    sections = {f.name: f for f in fields(RunConfig) if f.name != "seed"}
    for key in raw:
        if key not in sections and key != "seed":
            errors.append(f"{key}: unknown section")
    parts = {
        name: _section(name, f.default_factory, raw.get(name), errors) for name, f in sections.items()
    }
    cfg = RunConfig(**parts, seed=raw.get("seed", 0))
    errors.extend(validate(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate(cfg: RunConfig) -> list[str]:
    e = []
    g, m, c = cfg.grid, cfg.model, cfg.control
    if g.dim not in (1, 2, 3):
        e.append(f"grid.dim must be 1, 2 or 3, got {g.dim}")
    if not isinstance(g.points, int) or g.points < 8 or g.points & (g.points - 1):
        e.append(f"grid.points must be a power of two >= 8, got {g.points}")
    if not (_num(g.half_width) and g.half_width > 0):
        e.append(f"grid.half_width must be positive, got {g.half_width}")
    if not _num(m.lam):
        e.append(f"model.lambda must be a finite number, got {m.lam}")
    if not (_num(m.sigma) and m.sigma > 0):
        e.append(f"model.sigma must be positive, got {m.sigma}")
    e.extend(PotentialSpec(**asdict(cfg.potential)).validate())
    R = cfg.observable.radius
    if not (_num(R) and R > 0):
        e.append(f"observable.radius must be positive, got {R}")
    elif _num(g.half_width) and R >= g.half_width:
        e.append(f"observable.radius R={R} must be below grid.half_width={g.half_width}")
    if cfg.initial.kind not in ("gaussian", "file"):
        e.append(f"initial.kind must be 'gaussian' or 'file', got {cfg.initial.kind!r}")
    elif cfg.initial.kind == "file" and not cfg.initial.path:
        e.append("initial.path is required for kind 'file'")
    if not (_num(c.T) and c.T > 0):
        e.append(f"control.T must be positive, got {c.T}")
    if not isinstance(c.n_steps, int) or c.n_steps < 2:
        e.append(f"control.n_steps must be an integer >= 2, got {c.n_steps}")
    if c.path is None and c.shape not in ("constant", "ramp", "sine"):
        e.append(f"control.shape must be constant, ramp or sine, got {c.shape!r}")
    if not (_num(cfg.cost.gamma1) and cfg.cost.gamma1 >= 0):
        e.append(f"cost.gamma1 must be >= 0, got {cfg.cost.gamma1}")
    if not (_num(cfg.cost.gamma2) and cfg.cost.gamma2 > 0):
        e.append(f"cost.gamma2 must be > 0 (the control penalty weight is strictly positive), got {cfg.cost.gamma2}")
    b = cfg.bounds
    if not (_num(b.M1) and b.M1 > 0 and _num(b.M2) and b.M2 > 0):
        e.append(f"bounds.M1 and bounds.M2 must be positive, got M1={b.M1}, M2={b.M2}")
    elif _num(c.phi0) and abs(c.phi0) > b.M2:
        e.append(f"|control.phi0|={abs(c.phi0)} exceeds bounds.M2={b.M2}")
    if not isinstance(cfg.solver.stride, int) or cfg.solver.stride < 1:
        e.append(f"solver.stride must be an integer >= 1, got {cfg.solver.stride}")
    if not (_num(cfg.solver.blowup_guard) and cfg.solver.blowup_guard > 0):
        e.append(f"solver.blowup_guard must be positive, got {cfg.solver.blowup_guard}")
    if not isinstance(cfg.seed, int):
        e.append(f"seed must be an integer, got {cfg.seed!r}")
    return e


def load_config(path) -> RunConfig:
    if str(path) == "default":
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: parse error at {where}: {exc.problem}") from None
    return from_dict(raw)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))


def build(cfg: RunConfig):
    """Materialize grid, initial state, model, potential, control and problem."""
    g = make_grid(cfg.grid.dim, cfg.grid.points, cfg.grid.half_width)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TheoremRangeWarning)
        model = validate_model(ModelParams(cfg.model.lam, cfg.model.sigma, cfg.grid.dim))
    V = make_potential(PotentialSpec(**asdict(cfg.potential)), g)
    u0 = initial_state(cfg, g)
    bounds = AdmissibilityBounds(cfg.bounds.M1, cfg.bounds.M2)
    cost = CostParams(
        cfg.cost.gamma1,
        cfg.cost.gamma2,
        ObservableSpec(cfg.observable.radius, cfg.observable.amplitude),
        bounds,
    )
    problem = ControlProblem(u0, model, V, cost, cfg.solver.stride, cfg.solver.blowup_guard)
    return problem, initial_control(cfg, bounds), [str(w.message) for w in caught]


def initial_state(cfg: RunConfig, g) -> State:
    ic = cfg.initial
    if ic.kind == "file":
        s = read_snapshot(ic.path)
        if s.grid != g:
            raise ConfigError(f"initial.path grid {s.grid} does not match configured grid {g}")
        return s
    r2 = sum((x - ic.center) ** 2 for x in g.coords)
    return State(g, ic.amplitude * np.exp(-r2 / ic.width**2))


def initial_control(cfg: RunConfig, bounds) -> ControlPath:
    cc = cfg.control
    if cc.path:
        from .io import read_control_csv

        return read_control_csv(cc.path, bounds=bounds)
    return make_control(cc.T, cc.n_steps, cc.phi0, cc.shape, amplitude=cc.amplitude, bounds=bounds)


def optimizer_options(cfg: RunConfig) -> OptimizeOptions:
    return OptimizeOptions(**asdict(cfg.optimizer))
