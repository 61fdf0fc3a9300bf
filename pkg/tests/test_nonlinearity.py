import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonloc_front.errors import InvalidNonlinearity
from nonloc_front.nonlinearity import Bistable, validate


def test_root_at_theta(cubic):
    assert cubic.eval(0.3) == 0.0
    assert cubic.eval(0.0) == 0.0 and cubic.eval(1.0) == 0.0


def test_linear_extension_below_zero(cubic):
    assert cubic.fprime0 == pytest.approx(-0.3, abs=1e-15)
    assert cubic.eval(-0.5) == pytest.approx(0.15, abs=1e-15)


def test_linear_extension_above_one(cubic):
    # f'(1) = -(1 - theta) for the cubic
    assert cubic.fprime1 == pytest.approx(-0.7, abs=1e-15)
    assert cubic.eval(1.5) == pytest.approx(-0.35, abs=1e-15)


def test_deriv_matches_central_difference(cubic):
    # the extension is only C^1 at 0 and 1, so the sample points avoid them
    u = np.linspace(-0.49, 1.49, 21)
    d = 1e-4
    fd = (cubic.eval(u + d) - cubic.eval(u - d)) / (2 * d)
    assert np.max(np.abs(fd - cubic.deriv(u))) <= 1e-6


@pytest.mark.parametrize("theta", [0.1, 0.3, 0.45])
def test_integral_closed_form(theta):
    f = Bistable.cubic(theta)
    assert f.integral == pytest.approx((1 - 2 * theta) / 12, abs=1e-15)


def test_validate_theta_03(cubic):
    rep = validate(cubic, jdelta_inf=0.4)
    assert rep.c2_ok and rep.c5_ok and rep.nondegenerate_ok and rep.ok
    assert rep.integral == pytest.approx(1 / 30, abs=1e-15)
    assert rep.max_fprime == pytest.approx((1 - 0.3 + 0.09) / 3, abs=1e-15)


def test_validate_balanced_fails_c5():
    rep = validate(Bistable.cubic(0.5), jdelta_inf=1.0)
    assert not rep.c5_ok
    assert any("(C5)" in m for m in rep.messages)


def test_validate_degenerate_mass(cubic):
    rep = validate(cubic, jdelta_inf=0.2)
    assert not rep.nondegenerate_ok


def test_omega(cubic):
    rep = validate(cubic, jdelta_inf=0.5, jdelta_sup=1.0)
    assert rep.omega == pytest.approx(0.7 + 2.0)
    assert rep.omega >= 2 * 0.5


def test_balanced_odd_symmetry():
    f = Bistable.cubic(0.5)
    u = np.linspace(0, 1, 101)
    assert np.array_equal(f.eval(1 - u), -f.eval(u)) or np.max(np.abs(f.eval(1 - u) + f.eval(u))) < 1e-16


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.2, 1.3])
def test_cubic_rejects_theta(theta):
    with pytest.raises(InvalidNonlinearity):
        Bistable.cubic(theta)


def test_tabulated_reproduces_cubic(cubic):
    u = np.linspace(0, 1, 41)
    tab = Bistable.tabulated(u, cubic.eval(u), cubic.deriv(u))
    assert tab.theta == pytest.approx(0.3, abs=1e-9)
    s = np.linspace(-0.2, 1.2, 57)
    assert np.max(np.abs(tab.eval(s) - cubic.eval(s))) < 1e-9
    assert validate(tab, 1.0).ok


def test_tabulated_rejects_rough_derivative():
    u = np.linspace(0, 1, 11)
    f = Bistable.cubic(0.3)
    d = f.deriv(u)
    d[5] += 50.0
    with pytest.raises(InvalidNonlinearity):
        Bistable.tabulated(u, f.eval(u), d, lipschitz_bound=100.0)


def test_round_trip_dict(cubic):
    assert Bistable.from_dict(cubic.to_dict()) == cubic


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), theta=st.floats(0.05, 0.95))
def test_lipschitz_bound_holds(a, b, theta):
    f = Bistable.cubic(theta)
    assert abs(f.eval(a) - f.eval(b)) <= f.lipschitz * abs(a - b) * (1 + 1e-12) + 1e-15
