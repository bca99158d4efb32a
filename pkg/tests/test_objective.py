import numpy as np
import pytest

from nlscontrol.control import make_control
from nlscontrol.forward import evolve
from nlscontrol.grid import State, make_grid
from nlscontrol.model import ObservableSpec, PotentialSpec, make_observable, make_potential
from nlscontrol.objective import (
    CostParams,
    evaluate,
    observable_expectation,
    penalty_term,
    terminal_term,
    work_term,
)

from conftest import model


def test_terminal_term_oracle(gaussian):
    # adaptive quadrature of the bump (R = 2) against exp(-2 x^2), squared
    exact = 1.3629769941402525
    A = make_observable(ObservableSpec(2.0, 1.0), gaussian.grid)
    assert terminal_term(gaussian, A) == pytest.approx(exact, abs=1e-9)


def test_terminal_term_zero_outside_support(grid):
    far = State(grid, np.where(np.abs(grid.x - 6.0) < 2.0, 1.0, 0.0))
    A = make_observable(ObservableSpec(2.0, 1.0), grid)
    assert terminal_term(far, A) == 0.0


@pytest.mark.parametrize("theta", [0.4, 2.2])
def test_terminal_gauge_invariant(gaussian, theta):
    A = make_observable(ObservableSpec(2.0, 1.0), gaussian.grid)
    rotated = State(gaussian.grid, np.exp(1j * theta) * gaussian.values)
    assert terminal_term(rotated, A) == pytest.approx(terminal_term(gaussian, A), rel=1e-14)


def test_expectation_rejects_complex_weight(gaussian):
    with pytest.raises(AssertionError):
        observable_expectation(gaussian, 1j * np.ones(gaussian.grid.shape))


def test_penalty_examples():
    assert penalty_term(make_control(1.0, 10, 0.5), 0.3) == 0.0
    assert penalty_term(make_control(1.0, 10, 0.0, "ramp", amplitude=2.0), 0.3) == pytest.approx(1.2, rel=1e-14)


def test_work_examples():
    c = make_control(1.0, 4, 0.0, "ramp")
    assert work_term(c, np.full(5, 2.0), 0.5) == pytest.approx(2.0, rel=1e-14)
    assert work_term(make_control(1.0, 4, 0.3), np.full(5, 2.0), 0.5) == 0.0
    with pytest.raises(ValueError):
        work_term(c, np.ones(4), 0.5)


def test_work_matches_energy_rate(grid, gaussian):
    """gamma1 int (phi' omega)^2 = 4 gamma1 int (dE/dt)^2 along a trajectory."""
    V = make_potential(PotentialSpec("gaussian_well"), grid)
    c = make_control(0.5, 500, 0.0, "sine")
    traj = evolve(gaussian, c, model(1.0, 1.0), V)
    dE = np.diff(traj.energy) / c.dt
    assert work_term(c, traj.omega, 0.2) == pytest.approx(4 * 0.2 * c.dt * np.sum(dE**2), rel=1e-4)


def test_cost_params_validation():
    with pytest.raises(ValueError, match="gamma2"):
        CostParams(gamma2=0.0)
    with pytest.raises(ValueError, match="gamma1"):
        CostParams(gamma1=-1.0)


def test_evaluate_breakdown(grid, gaussian):
    V = make_potential(PotentialSpec(alpha=0.5), grid)
    c = make_control(0.1, 20, 0.0, "ramp")
    traj = evolve(gaussian, c, model(1.0, 1.0), V)
    p = CostParams(gamma1=0.1, gamma2=0.01)
    A = make_observable(p.observable, grid)
    cost = evaluate(traj, c, p, A)
    assert cost.total == cost.terminal + cost.work + cost.penalty
    assert set(cost.as_dict()) == {"terminal", "work", "penalty", "total"}
    with pytest.raises(ValueError, match="does not match"):
        evaluate(traj, make_control(0.1, 10, 0.0), p, A)
