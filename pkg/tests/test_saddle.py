import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folpi.errors import FlowError, ParseError
from folpi.saddle import (SaddleModel, col_passage, dulac_asymptotics, dulac_flow, dulac_integral,
                          dulac_map, first_integral, first_integral_along, flow, holonomy, transport)

TWO_PI = 2 * math.pi


# ---- model specs

def test_parse_specs():
    assert SaddleModel.parse("linear:1/2") == SaddleModel.linear(0.5)
    m = SaddleModel.parse("dulac:1:A=1:Ai=x")
    assert m.kind == "dulac" and dict(m.A) == {(0, 0): 1 + 0j, (1, 0): 1j}
    m = SaddleModel.parse("normal:2/3:k=2:alpha=1/2,-1")
    assert (m.p0, m.q0, m.k, m.alpha) == (2, 3, 2, 0.5 - 1j)


@pytest.mark.parametrize("text", ["linear", "linear:0", "linear:1:A=1", "normal:1:k=0", "cubic:1",
                                  "dulac:1:A=x^", "linear:-1/2"])
def test_bad_specs(text):
    with pytest.raises(ParseError):
        SaddleModel.parse(text)


def test_vanishing_rate_is_refused_for_y():
    m = SaddleModel.dulac_form(1, {(0, 0): -4})
    with pytest.raises(FlowError):
        m.field("Y", np.array([0.5 + 0j]), np.array([0.5 + 0j]))


# ---- holonomy

moduli = st.floats(1e-4, 0.1)
angles = st.floats(0, TWO_PI)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["1/2", "1/3", "2/5", "3", "1", "5/2"]), moduli, angles)
def test_linear_holonomy_is_a_rotation(lam, r, a):
    m = SaddleModel.parse(f"linear:{lam}")
    y0 = r * cmath.exp(1j * a)
    assert abs(holonomy(m, y0) - cmath.exp(-2j * math.pi * m.lam) * y0) < 1e-9


def test_dulac_form_holonomy_closed_form():
    # rate 1 + x*y: the holonomy is a parabolic Mobius map
    m = SaddleModel.parse("dulac:1:A=1")
    y0 = np.array([1e-3, 0.01j, 0.05 * cmath.exp(0.7j)])
    np.testing.assert_allclose(holonomy(m, y0), y0 / (1 + TWO_PI * 1j * y0), rtol=1e-9)


def test_normal_form_holonomy_closed_form():
    m = SaddleModel.normal_form(1, 1, 0)
    y0 = np.array([1e-3, 0.01j, 0.05 * cmath.exp(2.0j)])
    np.testing.assert_allclose(holonomy(m, y0), y0 / (1 - TWO_PI * 1j * y0), rtol=1e-9)


def test_two_turns_compose():
    m = SaddleModel.normal_form(1, 1, 0.5)
    y0 = 0.02 * cmath.exp(0.3j)
    assert abs(holonomy(m, y0, turns=2) - holonomy(m, holonomy(m, y0))) < 1e-12


def test_holonomy_domain():
    with pytest.raises(ValueError):
        holonomy(SaddleModel.linear(1), 0.2)


# ---- col passage

def test_linear_col_passage_closed_form():
    lam = 0.5
    m = SaddleModel.linear(lam)
    x = np.array([5e-2, 1e-3, 1e-4]) * np.exp(0.4j)
    cp = col_passage(m, x, 0.3)
    np.testing.assert_allclose(cp.tau, -lam * np.log(np.abs(x)), rtol=1e-10)
    np.testing.assert_allclose(cp.y_end, np.exp(0.3j) * np.abs(x) ** lam, rtol=1e-9)
    np.testing.assert_allclose(np.abs(cp.x_end), 1, atol=1e-12)


def test_boundary_points_do_not_move():
    cp = col_passage(SaddleModel.linear(1), np.array([1.0 + 0j]), 1.0)
    assert cp.tau[0] == 0 and cp.y_end[0] == cmath.exp(1j)


@pytest.mark.parametrize("spec", ["linear:2/5", "dulac:1:A=1", "normal:1:k=1:alpha=0"])
def test_col_passage_keeps_argument_and_approaches_circle(spec):
    m = SaddleModel.parse(spec)
    x = np.array([5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4]) * np.exp(1.1j)
    cp = col_passage(m, x, -2.0)
    assert np.max(np.abs(np.angle(cp.y_end * np.exp(2.0j)))) < 1e-9
    assert np.all(np.diff(np.abs(cp.y_end)) < 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-4, 0.05), angles, angles, st.floats(1e-4, 0.05), angles, angles)
def test_col_passage_is_injective(r1, a1, t1, r2, a2, t2):
    m = SaddleModel.normal_form(1, 1, 0.5)
    x = np.array([r1 * cmath.exp(1j * a1), r2 * cmath.exp(1j * a2)])
    cp = col_passage(m, x, np.array([t1, t2]))
    start_gap = abs(x[0] - x[1]) + abs(cmath.exp(1j * t1) - cmath.exp(1j * t2))
    end_gap = abs(cp.x_end[0] - cp.x_end[1]) + abs(cp.y_end[0] - cp.y_end[1])
    if start_gap > 1e-6:
        assert end_gap > 1e-9
    # going back along Y for the hitting time returns to the start
    back, _ = transport(m, "Y", np.stack([cp.x_end, cp.y_end], axis=1), -cp.tau, check_bidisc=False)
    np.testing.assert_allclose(back[:, 0], x, rtol=1e-7)


# ---- first integral

@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.3 - 0.2j])
def test_first_integral_conserved_along_x(alpha):
    m = SaddleModel.normal_form(1, 1, alpha)
    traj = flow(m, (0.5 + 0j, 0.2 + 0j), "X", [0, TWO_PI * 1j], h_max=1e-4)
    assert traj.stats.steps >= 9000
    H = first_integral_along(m, traj)
    assert np.max(np.abs(H / H[0] - 1)) < 1e-8


def test_first_integral_conserved_along_y_in_complex_time():
    m = SaddleModel.normal_form(2, 1, 0.5)
    # start away from the axes: H subtracts terms of size |u|^-k
    traj = flow(m, (0.3 + 0j, 0.4 + 0.1j), "Y", [0, 0.5, 0.5 + 2j])
    H = first_integral_along(m, traj)
    assert np.max(np.abs(H / H[0] - 1)) < 1e-8


def test_first_integral_point_value_matches_trajectory_start():
    m = SaddleModel.normal_form(1, 1, 0.5)
    traj = flow(m, (0.5 + 0j, 0.2 + 0j), "X", [0, 0.1j])
    assert abs(first_integral(m, 0.5, 0.2) - first_integral_along(m, traj)[0]) < 1e-14


def test_trajectory_csv_has_modulus_column():
    m = SaddleModel.normal_form(1, 1, 0)
    csv = flow(m, (0.5 + 0j, 0.2 + 0j), "X", [0, 0.5j]).csv(m).splitlines()
    assert csv[0].endswith("abs_H") and csv[1].count(",") == 6


# ---- Dulac map

@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_dulac_two_methods_agree(alpha):
    m = SaddleModel.normal_form(1, 1, alpha)
    r = np.array([1e-2, 1e-3, 1e-4, 1e-2, 1e-5])
    theta = np.array([0.0, 1.0, 3.0, 6.0, 10.0])
    a, b = dulac_flow(m, r, theta), dulac_integral(m, r, theta)
    assert np.max(np.abs(a - b) / np.abs(b)) < 1e-7
    dulac_map(m, r, theta, method="auto")


def test_dulac_linear_closed_form():
    # x^p0 y^q0 is constant on leaves of the linear saddle
    m = SaddleModel.linear(0.5)
    r, th = np.array([1e-2, 1e-4]), np.array([0.5, 4.0])
    expected = (r * np.exp(1j * th)) ** (1 / m.lam)
    np.testing.assert_allclose(dulac_flow(m, r, th), expected, rtol=1e-8)


def test_dulac_sector_is_checked():
    with pytest.raises(ValueError):
        dulac_flow(SaddleModel.linear(1), 1e-3, -0.5)
    with pytest.raises(ValueError):
        dulac_flow(SaddleModel.linear(1), 1e-3, 13.0)


def test_asymptotic_exponent_linear_one():
    rep = dulac_asymptotics(SaddleModel.linear(1))
    assert abs(rep.kappa - 1) < 1e-3
    assert abs(rep.limit - 1) < 1e-3
    assert "lambda" in rep.convention


def test_asymptotic_exponent_linear_two_is_flagged():
    rep = dulac_asymptotics(SaddleModel.linear(2))
    assert min(abs(rep.kappa - 2), abs(rep.kappa - 0.5)) < 1e-2
    assert rep.convention in ("lambda", "1/lambda")
    assert rep.csv().startswith("r,kappa_estimate,residual")


def test_normal_form_dulac_is_asymptotically_identity():
    rep = dulac_asymptotics(SaddleModel.normal_form(1, 1, 0), method="auto")
    assert abs(rep.kappa - 1) < 1e-2
    # |D(y)| / |y| -> 1 as the log correction dies out
    gap = np.abs(np.abs(rep.values) / rep.radii - 1)
    assert np.all(np.diff(gap) < 0) and gap[-1] < 1e-4
