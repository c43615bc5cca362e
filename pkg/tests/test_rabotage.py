import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folpi.rabotage import (CollarSlab, ContainmentError, FlowCollar, LinearCollar, build_slabs,
                            grid_saturation, iterate_rabotage, lunule_decomposition, rabotage_slab,
                            radial_distance, reduce_disc, slicewise_contained, verify_bounds_sweep)
from folpi.rugosity import Radial
from folpi.saddle import SaddleModel

from helpers import random_radial

TWO_PI = 2 * math.pi
seeds = st.integers(0, 2 ** 32 - 1)


def cosine_example():
    """Half-turn rotation of a slightly off-centre disc: the image is
    1 - 0.05 cos, so the two boundaries cross at pi/2 and 3 pi/2."""
    delta = Radial.cosine(1.0, 0.05, 1)
    return delta, LinearCollar(delta, 0.5)


def non_nested_pair(rng):
    while True:
        a = Radial.fourier(1.0, *random_radial(rng))
        b = Radial.fourier(1.0, *random_radial(rng))
        t = np.linspace(0, TWO_PI, 4096, endpoint=False)
        d = a(t) - b(t)
        if d.min() < -1e-6 and d.max() > 1e-6:
            return a, b


# ---- lunules

def test_cosine_example_has_two_lunules():
    delta, collar = cosine_example()
    dec = lunule_decomposition(delta, collar.image())
    assert dec.q == 2 and dec.nondegenerate == (1, 2)
    assert np.allclose(dec.angles[:2], [math.pi / 2, 3 * math.pi / 2], atol=1e-8)
    # delta is outer on (-pi/2, pi/2) where cos > 0
    tags = {round(l.start, 6): l.tag for l in dec.lunules}
    assert tags[round(math.pi / 2, 6)] == "b" and tags[round(3 * math.pi / 2, 6)] == "a"
    assert dec.csv().count("\n") == 3


def test_lunules_tile_one_turn():
    rng = np.random.default_rng(5)
    a, b = non_nested_pair(rng)
    dec = lunule_decomposition(a, b)
    assert abs(dec.angles[-1] - dec.angles[0] - TWO_PI) < 1e-12
    for l1, l2 in zip(dec.lunules, dec.lunules[1:]):
        assert l1.end == l2.start and l1.start < l1.end
    # sign of the difference is constant inside each nondegenerate lunule
    for l in dec.lunules:
        t = np.linspace(l.start, l.end, 50)[1:-1]
        d = b(t) - a(t)
        assert np.all(d > 0) if l.tag == "b" else np.all(d < 0)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_non_nested_pairs_have_two_lunules(seed):
    a, b = non_nested_pair(np.random.default_rng(seed))
    assert lunule_decomposition(a, b).q >= 2


def test_nested_pairs_are_refused():
    a = Radial.circle(1.0)
    with pytest.raises(ContainmentError):
        lunule_decomposition(a, Radial.cosine(1.5, 0.1, 2))
    with pytest.raises(ContainmentError):
        lunule_decomposition(a, Radial.cosine(0.5, 0.1, 2))


def test_equal_domains_have_no_lunules():
    a = Radial.cosine(1, 0.1, 3)
    assert lunule_decomposition(a, a).empty


def test_tangency_gives_degenerate_lunule():
    a = Radial.circle(1.0)
    b = Radial(lambda t: 1 + 0.05 * np.sin(t) ** 2 * np.sign(np.sin(t)) * np.abs(np.sin(t)),
               lambda t: 0.15 * np.sin(t) * np.abs(np.sin(t)) * np.cos(t))
    dec = lunule_decomposition(a, b)
    assert len(dec.nondegenerate) == 2 and dec.q >= 2


# ---- collars

def test_linear_collar_closed_forms():
    delta, collar = cosine_example()
    t = np.linspace(0, TWO_PI, 17)
    np.testing.assert_allclose(collar.image()(t), 1 - 0.05 * np.cos(t), rtol=1e-15)
    # leaves are x^(1/2) y = const, so the slice at angle 0 is rho(t/2)^2 on [0, 2 pi)
    np.testing.assert_allclose(collar.slice(0.0)(t[:-1]), delta(t[:-1] / 2) ** 2, rtol=1e-13)
    # transports compose and invert
    s = collar.slice(0.3)
    two_step = collar.transport(collar.transport(s, 0.3, 1.1), 1.1, 2.0)
    np.testing.assert_allclose(two_step(t), collar.transport(s, 0.3, 2.0)(t), rtol=1e-13)
    np.testing.assert_allclose(collar.transport(collar.transport(s, 0.3, 1.1), 1.1, 0.3)(t), s(t), rtol=1e-13)


@pytest.mark.parametrize("lam", ["1", "1/2", "2"])
def test_flow_collar_matches_linear_collar(lam):
    m = SaddleModel.parse(f"linear:{lam}")
    delta = Radial.cosine(1e-2, 0.05, 3)
    flow_c, exact = FlowCollar(m, delta, 512), LinearCollar(delta, m.lam)
    t = np.linspace(0.05, TWO_PI, 97)
    rel = lambda a, b: float(np.max(np.abs(a(t) / b(t) - 1)))  # noqa: E731
    assert rel(flow_c.image(), exact.image()) < 1e-8
    assert rel(flow_c.slice(1.0), exact.slice(1.0)) < 1e-8
    s = exact.slice(0.4)
    assert rel(flow_c.transport(s, 0.4, 2.0), exact.transport(s, 0.4, 2.0)) < 1e-8


# ---- rabotage

def test_rabotage_is_idempotent_and_shrinks_slab():
    delta, collar = cosine_example()
    dec = lunule_decomposition(delta, collar.image())
    for slab in build_slabs(dec, collar):
        rs = rabotage_slab(slab)
        assert rs.is_suspension and rabotage_slab(rs) is rs
        assert slicewise_contained(rs, slab)


def test_kept_angle_rule_against_the_other_endpoint():
    # carrying the slice from the other end of the lunule leaves the collar
    delta, collar = cosine_example()
    dec = lunule_decomposition(delta, collar.image())
    for slab in build_slabs(dec, collar):
        keep = slab.lunule.kept_angle
        other = slab.start if keep == slab.end else slab.end
        wrong = CollarSlab(slab.start, slab.end, collar, slab.lunule, (other, collar.slice(other)))
        assert slicewise_contained(rabotage_slab(slab), slab)
        assert not slicewise_contained(wrong, slab)


def test_iterated_rabotage_matches_grid_oracle():
    delta, collar = cosine_example()
    dec, res = reduce_disc(delta, collar)
    assert res.lengths == [2, 1]
    oracle = grid_saturation(collar, res.theta0, 0.0, n_grid=720)
    assert radial_distance(res.domain, oracle) < 1e-6


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.5, 1 / 3, 2 / 3]))
def test_random_discs_against_oracle(seed, lam):
    rng = np.random.default_rng(seed)
    delta = Radial.fourier(1.0, *random_radial(rng, modes=3, amp=0.2))
    collar = LinearCollar(delta, lam)
    try:
        dec, res = reduce_disc(delta, collar, basepoint=0.4)
    except ContainmentError:
        return
    assert res.lengths == list(range(max(dec.q, 1), 0, -1))
    oracle = grid_saturation(collar, res.theta0, 0.4, n_grid=720)
    assert radial_distance(res.domain, oracle) < 1e-6


def test_reduced_disc_is_a_suspension_inside_the_collar():
    delta, collar = cosine_example()
    _, res = reduce_disc(delta, collar)
    phi = np.linspace(0, TWO_PI, 1024, endpoint=False)
    for theta in np.linspace(0, TWO_PI, 33):
        moved = collar.transport(res.domain, 0.0, theta)
        assert np.all(moved(phi) <= collar.slice(theta)(phi) * (1 + 1e-12))
    # a genuine disc, strictly smaller than the slice where lunules are planed off
    assert res.domain(phi).min() > 0
    assert np.max(collar.slice(0.0)(phi) - res.domain(phi)) > 1e-3


def test_no_lunules_gives_back_the_disc():
    delta = Radial.cosine(1.0, 0.05, 3)
    collar = LinearCollar(delta, 1.0)
    dec, res = reduce_disc(delta, collar)
    assert dec.empty and res.lengths == [1]
    assert radial_distance(res.domain, delta) < 1e-14


def test_slabs_must_chain():
    delta, collar = cosine_example()
    with pytest.raises(Exception):
        iterate_rabotage([CollarSlab(0, 1, collar), CollarSlab(1.5, TWO_PI, collar)])


def test_nonlinear_containment_up_to_first_order():
    # images of y-rays are not rays in the x-slice, so a radial comparison
    # carries an error of order |y|
    r = 1e-3
    m = SaddleModel.normal_form(1, 1, 0)
    delta = Radial.cosine(r, 0.05, 3)
    collar = FlowCollar(m, delta, 512)
    dec = lunule_decomposition(delta, collar.image())
    assert dec.q >= 2
    slab = build_slabs(dec, collar)[0]
    assert slicewise_contained(rabotage_slab(slab), slab, n_angles=4, n=512, tol=10 * r)


# ---- bounds sweep

def test_sweep_linear_unit_ratio():
    rep = verify_bounds_sweep(SaddleModel.linear(1))
    assert rep.error is None and abs(rep.slope - 1) < 0.05
    assert rep.loss_monotone and all(row.loss == 0 for row in rep.rows)


def test_sweep_linear_half_ratio_flags_convention():
    rep = verify_bounds_sweep(SaddleModel.linear(0.5), radii=(1e-2, 1e-3, 1e-4))
    assert rep.convention == "1/lambda" and abs(rep.slope - 2) < 0.05
    # cos 3t against its half-turn rotation crosses six times
    assert rep.loss_monotone and all(row.q == 6 for row in rep.rows)
    assert rep.csv().startswith("radius,size_in")
