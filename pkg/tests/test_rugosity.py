import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folpi.rugosity import (PACurve, Piece, Radial, Rotated, SampledRadial, intersection,
                            pointwise_rugosity, rugosity, size, union,
                            union_intersection_rugosity_check, xi_rugosity)

from helpers import random_radial

TWO_PI = 2 * math.pi
seeds = st.integers(0, 2 ** 32 - 1)


def _formula(rho, drho, n=200_000):
    """max |arctan(rho'/rho)| on a dense grid, without building a curve."""
    t = np.linspace(0, TWO_PI, n, endpoint=False)
    return float(np.max(np.abs(np.arctan(drho(t) / rho(t)))))


# ---- curves

def test_circle_is_perfectly_smooth():
    assert rugosity(PACurve.circle_arc(0.3, 0, TWO_PI)) < 1e-15


@pytest.mark.parametrize("k", [0.0, 0.1, -0.5, 2.0])
def test_log_spiral_closed_form(k):
    c = PACurve.log_spiral(k, -3.0, 3.0)
    assert abs(rugosity(c) - math.atan(abs(k))) < 1e-6


def test_reversed_curves_are_infinitely_rough():
    assert rugosity(PACurve.log_spiral(0.3, 0, 2).reversed()) == math.inf
    assert rugosity(PACurve.circle_arc(1, 0, 1).reversed()) == math.inf


def test_radial_segment_is_infinitely_rough():
    assert rugosity(PACurve.radial_segment(0.5, 1.0, 0.3)) == math.inf


def test_pointwise_sign_convention():
    z = np.array([1.0 + 0j])
    # tangent tilted outward by 30 degrees
    assert abs(pointwise_rugosity(z, np.array([np.exp(1j * math.pi / 3)]))[0] - math.pi / 6) < 1e-15


def test_curve_validation():
    with pytest.raises(ValueError):
        PACurve([Piece(np.array([1, 2j]), np.array([1, 1])), Piece(np.array([3, 4]), np.array([1, 1]))])
    with pytest.raises(ValueError):
        PACurve([Piece(np.array([1, 2]), np.array([0, 1]))])
    with pytest.raises(ValueError):
        rugosity(PACurve.radial_segment(0.0, 1.0, 0.0))


def test_curves_concatenate():
    a = PACurve.circle_arc(1, 0, 1)
    b = PACurve.log_spiral(0.2, 1, 2, scale=math.exp(-0.2))
    assert len(a.concat(b).pieces) == 2
    assert abs(rugosity(a.concat(b)) - math.atan(0.2)) < 1e-6


# ---- star domains

@settings(max_examples=30, deadline=None)
@given(seeds)
def test_domain_rugosity_matches_formula(seed):
    a, b = random_radial(np.random.default_rng(seed))
    d = Radial.fourier(1.0, a, b)
    assert abs(d.rugosity(4096) - _formula(d._rho, d._drho)) < 1e-6


def test_cosine_domain_rugosity_and_size():
    d = Radial.cosine(2e-3, 0.05, 3)
    # rho'/rho = -0.15 sin / (1 + 0.05 cos), maximized where cos = -0.05
    c = -0.05
    expected = math.atan(0.15 * math.sqrt(1 - c * c) / (1 + 0.05 * c))
    assert abs(d.rugosity() - expected) < 1e-6
    assert abs(size(d) - 2.1e-3) < 1e-15


def test_rotation_shifts_values():
    d = Radial.cosine(1, 0.2, 1)
    r = Rotated(d, 0.7)
    t = np.linspace(0, 6, 13)
    np.testing.assert_allclose(r(t), d(t - 0.7), rtol=1e-15)
    assert abs(r.rugosity() - d.rugosity()) < 1e-9


def test_union_and_intersection_are_pointwise():
    a, b = Radial.cosine(1, 0.1, 2), Radial.circle(1.0)
    t = np.linspace(0, TWO_PI, 101)
    np.testing.assert_array_equal(union(a, b)(t), np.maximum(a(t), b(t)))
    np.testing.assert_array_equal(intersection(a, b)(t), np.minimum(a(t), b(t)))
    # crossings of cos 2t = 0
    np.testing.assert_allclose(np.sort(intersection(a, b).breaks), [math.pi / 4 * k for k in (1, 3, 5, 7)],
                               atol=1e-12)


def test_corner_slopes_follow_the_active_child():
    a, b = Radial.cosine(1, 0.1, 1), Radial.circle(1.0)
    m = intersection(a, b)
    t = math.pi / 2                      # a crosses b going down
    assert m.slope(t, 1) == pytest.approx(-0.1)
    assert m.slope(t, -1) == 0.0
    u = union(a, b)
    assert u.slope(t, 1) == 0.0 and u.slope(t, -1) == pytest.approx(-0.1)


def test_corner_rugosity_is_the_larger_side():
    a, b = Radial.cosine(1, 0.1, 1), Radial.circle(1.0)
    assert abs(intersection(a, b).rugosity() - a.rugosity()) < 1e-6


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_union_intersection_rugosity_bound(seed):
    rng = np.random.default_rng(seed)
    a = Radial.fourier(1.0, *random_radial(rng))
    b = Radial.fourier(float(rng.uniform(0.8, 1.2)), *random_radial(rng))
    v = union_intersection_rugosity_check(a, b, n=2048)
    assert v.holds, v


def test_sampled_radial_reproduces_smooth_function():
    d = Radial.cosine(1, 0.2, 2)
    t = np.linspace(0, TWO_PI, 1025)
    s = SampledRadial(0.0, d(t))
    probe = np.linspace(0, TWO_PI, 333)
    np.testing.assert_allclose(s(probe), d(probe), rtol=1e-9)
    np.testing.assert_allclose(s.slope(probe), d.slope(probe), atol=1e-6)


def test_sampled_radial_with_seam_has_infinite_rugosity():
    s = SampledRadial(1.0, np.linspace(1.0, 1.1, 200))
    assert s(1.0) == 1.1 and s.value(1.0, 1) == 1.0 and s.value(1.0, -1) == 1.1
    assert s.rugosity() == math.inf


def test_from_curve_requires_one_turn():
    with pytest.raises(ValueError):
        SampledRadial.from_curve(np.linspace(0, 6, 50), np.ones(50))
    with pytest.raises(ValueError):
        SampledRadial.from_curve(np.r_[0, 1, 0.5, TWO_PI], np.ones(4))


def test_csv_has_header_and_rows():
    lines = Radial.circle(1).csv(10).splitlines()
    assert lines[0] == "theta,rho" and len(lines) == 11


# ---- rugosity under a holomorphic map

def _g(z):
    return z * (1 + z)


def _dg(z):
    return 1 + 2 * z


@pytest.mark.parametrize("r", [1e-1, 1e-2, 1e-3, 1e-4])
def test_xi_bound_on_circles_and_cosine_domains(r):
    for d in (Radial.circle(r), Radial.cosine(r, 0.05, 3), Radial.cosine(r, 0.2, 1, 0.4)):
        res = xi_rugosity(d.boundary_curve(2048), _g, _dg)
        assert res.holds and res.direct <= res.bound
        assert res.constant == pytest.approx(1.0, rel=0.2)


def test_xi_bound_in_a_sector():
    # the principal square root is holomorphic on the right half plane
    arc = PACurve.circle_arc(0.01, -1.0, 1.0)
    res = xi_rugosity(arc, lambda z: z * np.sqrt(1 + z), lambda z: np.sqrt(1 + z) + z / (2 * np.sqrt(1 + z)),
                      sector=(-1.2, 1.2))
    assert res.holds
    with pytest.raises(ValueError):
        xi_rugosity(arc, _g, _dg, sector=(0.0, 1.0))
