import numpy as np
import pytest

from nlscontrol.grid import State, inner_product, make_grid
from nlscontrol.model import (
    DEFOCUSING_OK,
    FOCUSING_OK,
    OUTSIDE_THEOREMS,
    ModelParams,
    ObservableSpec,
    PotentialSpec,
    TheoremRangeWarning,
    conjugate_coefficient,
    make_observable,
    make_potential,
    nonlinear_term,
    validate_model,
)

from conftest import model, random_state


def test_inverse_power_far_field():
    grid = make_grid(1, 256, 8.0)
    V = make_potential(PotentialSpec(alpha=0.5, epsilon=1e-12), grid)
    j = np.argmin(np.abs(grid.x - 4.0))
    assert grid.x[j] == 4.0
    assert V[j] == pytest.approx(0.5, rel=1e-12)


def test_inverse_power_origin_regularized(grid):
    V = make_potential(PotentialSpec(alpha=0.5), grid)
    j = np.argmin(np.abs(grid.x))
    assert grid.x[j] == 0.0
    assert V[j] == pytest.approx(grid.dx**-0.5, rel=1e-14)
    assert np.all(np.isfinite(V))


def test_uniform_potential(grid):
    assert np.all(make_potential(PotentialSpec("uniform", value=2.0), grid) == 2.0)


@pytest.mark.parametrize(
    "spec",
    [
        PotentialSpec(alpha=0.0),
        PotentialSpec(alpha=1.0),
        PotentialSpec(alpha=0.5, epsilon=0.0),
        PotentialSpec("from_file", path="/nonexistent/v.csv"),
        PotentialSpec("mystery"),
    ],
)
def test_potential_rejects(grid, spec):
    with pytest.raises(ValueError):
        make_potential(spec, grid)


def test_potential_from_csv(tmp_path, grid):
    from nlscontrol.io import write_field_csv, write_field_snapshot

    V = make_potential(PotentialSpec("gaussian_well", depth=2.0, width=1.5), grid)
    write_field_csv(tmp_path / "v.csv", grid, V)
    write_field_snapshot(tmp_path / "v.nlsc", grid, V)
    assert np.array_equal(make_potential(PotentialSpec("from_file", path=str(tmp_path / "v.csv")), grid), V)
    assert np.array_equal(make_potential(PotentialSpec("from_file", path=str(tmp_path / "v.nlsc")), grid), V)


def test_regularization_is_local(grid):
    eps = 4 * grid.dx
    a = make_potential(PotentialSpec(alpha=0.5, epsilon=eps), grid)
    b = make_potential(PotentialSpec(alpha=0.5, epsilon=eps / 2), grid)
    changed = np.abs(a - b) > 1e-10 * np.abs(a)
    # halving epsilon perturbs V by O(eps^2/|x|^2); far from the core the change is tiny
    assert np.all(np.abs(a - b)[grid.radius >= 4 * eps] <= 0.02 * a[grid.radius >= 4 * eps])
    assert np.any(changed[grid.radius < 4 * eps])


def test_observable_values(rng):
    grid = make_grid(1, 256, 8.0)
    spec = ObservableSpec(radius=2.0, amplitude=3.0)
    w = make_observable(spec, grid)
    assert w[np.argmin(np.abs(grid.x))] == 3.0
    assert np.all(w[grid.radius >= 2.0] == 0.0)
    j = np.flatnonzero(grid.x == 2.0)
    assert j.size == 1 and w[j[0]] == 0.0
    psi = random_state(grid, rng)
    z = inner_product(psi, State(grid, w * psi.values))
    assert abs(z.imag) < 1e-13 * abs(z.real)


def test_observable_even(grid):
    w = make_observable(ObservableSpec(2.5, 1.0), grid)
    # x_j and x_{M-j} are mirror images for j >= 1
    assert np.array_equal(w[1:], w[1:][::-1])


def test_observable_radius_too_large(grid):
    with pytest.raises(ValueError, match="half_width"):
        make_observable(ObservableSpec(10.0, 1.0), grid)


def test_validate_model_examples():
    m = validate_model(ModelParams(1.0, 0.8, 1))
    assert m.regime == FOCUSING_OK and m.gateaux_ok
    with pytest.warns(TheoremRangeWarning):
        m = validate_model(ModelParams(1.0, 3.0, 1))
    assert m.regime == OUTSIDE_THEOREMS and not m.gateaux_ok
    m = validate_model(ModelParams(-1.0, 1.0, 3))
    assert m.regime == DEFOCUSING_OK


def test_validate_model_boundaries():
    assert validate_model(ModelParams(-1.0, 50.0, 2)).regime == DEFOCUSING_OK
    assert not validate_model(ModelParams(1.0, 0.4, 1)).gateaux_ok
    with pytest.warns(TheoremRangeWarning):
        assert validate_model(ModelParams(-1.0, 2.0, 3)).regime == OUTSIDE_THEOREMS
    with pytest.warns(TheoremRangeWarning):
        assert validate_model(ModelParams(1.0, 1.0, 2)).regime == OUTSIDE_THEOREMS
    with pytest.raises(ValueError):
        validate_model(ModelParams(1.0, 0.0, 1))


def test_nonlinear_term_examples():
    g = make_grid(1, 8, 1.0)
    assert np.all(nonlinear_term(State(g, np.zeros(8)), model(1.0, 1.0)).values == 0)
    out = nonlinear_term(State(g, np.full(8, 1 + 1j)), model(2.0, 1.0))
    np.testing.assert_allclose(out.values, 4 + 4j, rtol=1e-15)
    out = nonlinear_term(State(g, np.full(8, 4.0)), model(1.0, 0.5))
    np.testing.assert_allclose(out.values, 16.0, rtol=1e-15)


@pytest.mark.parametrize("theta", [0.3, 1.7, -2.9])
def test_nonlinear_gauge_covariance(grid, rng, theta):
    s = random_state(grid, rng)
    m = model(1.3, 0.75)
    lhs = nonlinear_term(State(grid, np.exp(1j * theta) * s.values), m).values
    rhs = np.exp(1j * theta) * nonlinear_term(s, m).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * np.max(np.abs(rhs))


@pytest.mark.parametrize("sigma", [0.5, 0.75, 1.0, 1.5])
def test_conjugate_coefficient_zero_safe(sigma):
    u = np.array([0.0, 1e-100, 0.5 + 0.5j, 2.0j])
    c = conjugate_coefficient(u, model(1.0, sigma))
    assert np.all(np.isfinite(c))
    assert c[0] == 0
    np.testing.assert_allclose(np.abs(c), sigma * np.abs(u) ** (2 * sigma), rtol=1e-14)
