import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nlscontrol.grid import (
    GridMismatchError,
    State,
    inner_product,
    laplacian,
    make_grid,
    norms,
    read_snapshot,
    weighted_density_integral,
    write_snapshot,
)
from nlscontrol.model import PotentialSpec, make_potential

from conftest import random_state


def test_make_grid_spacing():
    g = make_grid(1, 256, 10)
    assert g.dx == 0.078125
    assert g.dx * g.points == 2 * g.half_width


def test_make_grid_wavenumbers_small():
    g = make_grid(1, 8, 4)
    k = g.wavenumbers
    assert k.size == 8
    np.testing.assert_allclose(sorted(k), np.pi / 4 * np.array([-4, -3, -2, -1, 0, 1, 2, 3]))
    # both signs present, Nyquist counted once
    assert np.sum(np.isclose(np.abs(k), np.pi)) == 1
    for m in (1, 2, 3):
        assert np.any(np.isclose(k, m * np.pi / 4)) and np.any(np.isclose(k, -m * np.pi / 4))


def test_make_grid_cells_2d():
    g = make_grid(2, 64, 5)
    assert g.size == 4096
    assert g.shape == (64, 64)


@pytest.mark.parametrize(
    "args", [(0, 64, 1.0), (4, 64, 1.0), (1, 100, 1.0), (1, 4, 1.0), (1, 64, 0.0), (1, 64, -2.0)]
)
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_state_rejects_nonfinite(grid):
    v = np.ones(grid.shape, dtype=complex)
    v[3] = np.nan
    with pytest.raises(ValueError):
        State(grid, v)
    with pytest.raises(ValueError):
        State(grid, np.ones(17))


@pytest.mark.parametrize("m", [1, 5, -7, 30])
def test_laplacian_plane_wave(grid, m):
    k = grid.wavenumbers[m]
    s = State(grid, np.exp(1j * k * grid.x))
    out = laplacian(s)
    np.testing.assert_allclose(out.values, -(k**2) * s.values, rtol=1e-12, atol=1e-12 * max(1.0, k**2))


def test_laplacian_constant_and_cosine(grid):
    assert np.max(np.abs(laplacian(State(grid, np.full(grid.shape, 2.5))).values)) < 1e-12
    k = grid.wavenumbers[4]
    s = State(grid, np.cos(k * grid.x))
    np.testing.assert_allclose(laplacian(s).values, -(k**2) * s.values, atol=1e-12)


def test_inner_product_box_length(grid):
    one = State(grid, np.ones(grid.shape))
    assert inner_product(one, one) == pytest.approx(20.0, rel=1e-14)


def test_inner_product_orthogonal_modes(grid):
    a = State(grid, np.exp(1j * grid.wavenumbers[3] * grid.x))
    b = State(grid, np.exp(1j * grid.wavenumbers[8] * grid.x))
    assert abs(inner_product(a, b)) < 1e-12


def test_inner_product_grid_mismatch(grid):
    other = make_grid(1, 128, 10.0)
    with pytest.raises(GridMismatchError):
        inner_product(State(grid, np.ones(256)), State(other, np.ones(128)))


def test_norms_examples(grid):
    one = State(grid, np.ones(grid.shape))
    assert norms(one)["l2"] == pytest.approx(np.sqrt(20), rel=1e-14)
    k = grid.wavenumbers[6]
    s = State(grid, np.exp(1j * k * grid.x))
    n = norms(s)
    assert n["h1"] ** 2 == pytest.approx((1 + k**2) * n["l2"] ** 2, rel=1e-12)
    assert n["h2"] ** 2 == pytest.approx((1 + k**4) * n["l2"] ** 2, rel=1e-12)


def test_weighted_density_examples(grid, gaussian):
    s = State(grid, gaussian.values / norms(gaussian)["l2"])
    assert weighted_density_integral(np.ones(grid.shape), s) == pytest.approx(1.0, rel=1e-13)
    odd = np.sin(grid.x) * np.exp(-0.1 * grid.x**2)
    # x = -L has no mirror partner on the periodic grid; the Gaussian vanishes there
    assert abs(weighted_density_integral(odd, gaussian)) < 1e-12


def test_weighted_density_singular_potential_quadrature():
    """Midpoint rule against doubled resolution and an adaptive-quadrature oracle."""
    exact = 2.305360226422872  # quad of (x^2+0.01)^(-1/4) exp(-2x^2) on [-10, 10]
    values = []
    for points in (256, 512):
        g = make_grid(1, points, 10.0)
        V = make_potential(PotentialSpec(alpha=0.5, epsilon=0.1), g)
        values.append(weighted_density_integral(V, State(g, np.exp(-g.x**2))))
    assert abs(values[0] - values[1]) <= 1e-4 * values[1]
    assert abs(values[1] - exact) <= 1e-7
    ref = quad(lambda x: (x * x + 0.01) ** -0.25 * np.exp(-2 * x * x), -10, 10, points=[0], limit=200)[0]
    assert ref == pytest.approx(exact, rel=1e-9)


def test_norm_dominance(grid, rng):
    s = random_state(grid, rng)
    n = norms(s)
    assert n["h2"] >= n["l2"] and n["h1"] >= n["l2"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_fft_roundtrip(seed, dim):
    g = make_grid(dim, 32, 3.0)
    s = random_state(g, np.random.default_rng(seed))
    back = g.ifft(g.fft(s.values))
    assert np.max(np.abs(back - s.values)) <= 1e-13 * np.max(np.abs(s.values)) * 10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parseval(seed):
    g = make_grid(1, 64, 5.0)
    s = random_state(g, np.random.default_rng(seed))
    pointwise = np.sqrt(g.cell_volume * np.sum(np.abs(s.values) ** 2))
    spectral = np.sqrt(g.cell_volume / g.size * np.sum(np.abs(g.fft(s.values)) ** 2))
    assert spectral == pytest.approx(pointwise, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_laplacian_self_adjoint(seed):
    g = make_grid(1, 64, 5.0)
    rng = np.random.default_rng(seed)
    weight = np.exp(-0.3 * g.x**2)
    a = State(g, weight * (rng.standard_normal(64) + 1j * rng.standard_normal(64)))
    b = State(g, weight * (rng.standard_normal(64) + 1j * rng.standard_normal(64)))
    lhs, rhs = inner_product(a, laplacian(b)), inner_product(laplacian(a), b)
    assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inner_product_conjugate_symmetry(seed):
    g = make_grid(1, 64, 5.0)
    rng = np.random.default_rng(seed)
    a, b = random_state(g, rng), random_state(g, rng)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("dim,points", [(1, 64), (2, 16), (3, 8)])
def test_snapshot_roundtrip(tmp_path, rng, dim, points):
    g = make_grid(dim, points, 2.5)
    s = random_state(g, rng)
    path = tmp_path / "s.nlsc"
    write_snapshot(path, g, s.values)
    back = read_snapshot(path)
    assert back.grid == g
    assert np.array_equal(back.values, s.values)


def test_snapshot_layout(tmp_path):
    g = make_grid(1, 8, 1.5)
    v = np.arange(8) + 1j * (10 + np.arange(8))
    path = tmp_path / "s.nlsc"
    write_snapshot(path, g, v)
    raw = path.read_bytes()
    assert raw[:4] == b"NLSC"
    assert np.frombuffer(raw[4:16], "<u4").tolist() == [1, 1, 8]
    assert np.frombuffer(raw[16:24], "<f8")[0] == 1.5
    body = np.frombuffer(raw[24:], "<f8")
    assert body[:4].tolist() == [0.0, 10.0, 1.0, 11.0]


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad.nlsc"
    path.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(path)
