"""Periodic-box grids, spectral operators and discrete inner products."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

SNAPSHOT_MAGIC = b"NLSC"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box [-L, L)^dim.

    Attributes
    ----------
    dim : int
        Spatial dimension (1, 2 or 3).
    points : int
        Samples per dimension, a power of two.
    half_width : float
        Half box length ``L``.
    """

    dim: int
    points: int
    half_width: float

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @cached_property
    def x(self) -> np.ndarray:
        """1D node coordinates ``-L + j*dx``; includes the origin."""
        return -self.half_width + self.dx * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``pi*m/L`` in numpy FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def k_components(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the full spectral grid."""
        return sum(k**2 for k in self.k_components)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values)

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(values)


def make_grid(dim: int, points_per_dim: int, half_width: float) -> Grid:
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    points_per_dim = int(points_per_dim)
    if points_per_dim < 8 or points_per_dim & (points_per_dim - 1):
        raise ValueError(f"points_per_dim must be a power of two >= 8, got {points_per_dim}")
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    return Grid(int(dim), points_per_dim, float(half_width))


@dataclass(frozen=True, eq=False)
class State:
    """Complex field sampled on a grid (row-major, shape ``grid.shape``)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.size != self.grid.size:
            raise ValueError(f"state has {values.size} samples, grid has {self.grid.size}")
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("state contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __mul__(self, other):
        return State(self.grid, self.values * other)

    __rmul__ = __mul__

    def __add__(self, other: State) -> State:
        _check_same_grid(self, other)
        return State(self.grid, self.values + other.values)

    def __sub__(self, other: State) -> State:
        _check_same_grid(self, other)
        return State(self.grid, self.values - other.values)


def _check_same_grid(a, b):
    ga = a.grid if isinstance(a, State) else a
    gb = b.grid if isinstance(b, State) else b
    if ga != gb:
        raise GridMismatchError(f"grid mismatch: {ga} vs {gb}")


def laplacian(s: State) -> State:
    g = s.grid
    return State(g, g.ifft(-g.k2 * g.fft(s.values)))


def inner_product(a: State, b: State) -> complex:
    """Left-conjugate L2 product ``dx^N * sum(conj(a) * b)``."""
    _check_same_grid(a, b)
    return complex(a.grid.cell_volume * np.vdot(a.values, b.values))


def _spectral_moments(s: State) -> tuple[float, float]:
    """Return (||grad s||^2, ||lap s||^2) via Parseval."""
    g = s.grid
    power = np.abs(g.fft(s.values)) ** 2
    scale = g.cell_volume / g.size
    return float(scale * np.sum(g.k2 * power)), float(scale * np.sum(g.k2**2 * power))


def norms(s: State) -> dict[str, float]:
    l2sq = inner_product(s, s).real
    grad2, lap2 = _spectral_moments(s)
    return {
        "l2": float(np.sqrt(l2sq)),
        "h1": float(np.sqrt(l2sq + grad2)),
        "h2": float(np.sqrt(l2sq + lap2)),
    }


def weighted_density_integral(w: np.ndarray, s: State) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != s.grid.shape:
        raise GridMismatchError(f"weight shape {w.shape} does not match grid {s.grid.shape}")
    return float(s.grid.cell_volume * np.sum(w * np.abs(s.values) ** 2))


def boundary_amplitude(s: State, fraction: float = 0.1) -> float:
    """Max |u| over cells within ``fraction`` of the box edge."""
    g = s.grid
    inner = (1.0 - fraction) * g.half_width
    mask = np.zeros(g.shape, dtype=bool)
    for c in g.coords:
        mask |= np.abs(c) >= inner
    return float(np.max(np.abs(s.values[mask]))) if mask.any() else 0.0


def write_snapshot(path, grid: Grid, values: np.ndarray) -> None:
    """Write a field in the NLSC binary format (little-endian)."""
    values = np.asarray(values, dtype=complex).reshape(grid.shape)
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.dim, grid.points, grid.half_width)
    body = np.empty(2 * values.size, dtype="<f8")
    body[0::2] = values.real.ravel()
    body[1::2] = values.imag.ravel()
    Path(path).write_bytes(header + body.tobytes())


def read_snapshot(path) -> State:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated NLSC header")
    magic, version, dim, points, half_width = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported NLSC version {version}")
    grid = make_grid(dim, points, half_width)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * grid.size:
        raise ValueError(f"{path}: expected {2 * grid.size} doubles, found {body.size}")
    return State(grid, body[0::2] + 1j * body[1::2])
