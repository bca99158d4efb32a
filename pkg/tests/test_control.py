import numpy as np
import pytest

from nlscontrol.control import (
    AdmissibilityBounds,
    derivative,
    h1_norm,
    l2_norm,
    make_control,
    pin_initial,
)


def test_constant_profile():
    c = make_control(1.0, 10, 0.7)
    assert np.all(c.nodes == 0.7)
    assert np.all(derivative(c) == 0)


def test_ramp_nodes():
    c = make_control(1.0, 4, 0.0, "ramp", amplitude=1.0)
    np.testing.assert_allclose(c.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(derivative(c), 1.0)


def test_nan_profile_rejected():
    with pytest.raises(ValueError, match="NaN"):
        make_control(1.0, 2, 0.0, [0.0, np.nan, 1.0])


def test_phi0_bound():
    with pytest.raises(ValueError, match="M2"):
        make_control(1.0, 4, 1.0, bounds=AdmissibilityBounds(1.0, 0.5))


def test_profile_node0_overwritten():
    c = make_control(1.0, 2, 0.3, [5.0, 1.0, 0.0])
    assert c.nodes[0] == 0.3 and c.phi0 == 0.3


def test_derivative_hat():
    c = make_control(1.0, 2, 0.0, [0.0, 1.0, 0.0])
    np.testing.assert_allclose(derivative(c), [2.0, -2.0])


def test_h1_norm_examples():
    assert h1_norm(make_control(1.0, 8, 0.0)) == 0.0
    assert h1_norm(make_control(1.0, 8, 1.0)) == pytest.approx(1.0, rel=1e-15)
    c = make_control(1.0, 4, 0.0, "ramp")
    # trapezoid rule for t^2 overshoots 1/3 by exactly dt^2/6
    assert h1_norm(c) ** 2 == pytest.approx(1 / 3 + 0.25**2 / 6 + 1.0, rel=1e-14)
    fine = make_control(1.0, 1000, 0.0, "ramp")
    assert abs(h1_norm(fine) - np.sqrt(4 / 3)) < 1e-6


def test_h1_dominates_l2(rng):
    for _ in range(10):
        c = make_control(2.0, 20, 0.0, rng.standard_normal(21))
        assert h1_norm(c) >= l2_norm(c)


def test_pin_initial():
    c = make_control(1.0, 4, 1.0)
    p = pin_initial(c, 0.0)
    np.testing.assert_array_equal(p.nodes, [0, 1, 1, 1, 1])
    assert np.array_equal(pin_initial(p, 0.0).nodes, p.nodes)
    with pytest.raises(ValueError):
        pin_initial(c, 1.0, bounds=AdmissibilityBounds(1.0, 0.5))


def test_piecewise_linear_reconstruction(rng):
    c = make_control(1.0, 10, 0.0, rng.standard_normal(11))
    assert np.array_equal(c.at(c.times), c.nodes)
    assert c.at(0.05) == pytest.approx(0.5 * (c.nodes[0] + c.nodes[1]))


def test_control_immutable():
    c = make_control(1.0, 4, 0.0, "ramp")
    with pytest.raises(ValueError):
        c.nodes[1] = 3.0
