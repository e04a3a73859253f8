import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hsl
from t3cen.colorspace import TWO_PI, HslImage, RgbImage
from t3cen.groups import (
    LUMINANCE, SATURATION, CoverMap, CyclicGroup, DomainError, HslGroup, ScaledImage, cover_lift,
    cover_project, function_action, grid_coordinates, group_function_action, hsl_action, hue_action,
    lcer_function_action, lcer_sat_action, lum_action, rgb_shift_action, sat_action, scale_action,
    scale_coordinate_angles, scale_coordinate_map,
)

angles = st.floats(0.0, TWO_PI, exclude_max=True, allow_nan=False)


def _pix(h=0.0, s=0.5, l=0.5):
    return HslImage(np.array([h, s, l], dtype=float).reshape(3, 1, 1))


# --- cyclic and product groups -------------------------------------------------


@pytest.mark.parametrize("n", range(1, 9))
def test_cyclic_axioms_exhaustive(n):
    g = CyclicGroup(n)
    els = list(g.elements())
    for a, b, c in itertools.product(els, repeat=3):
        assert g.compose(g.compose(a, b), c) == g.compose(a, g.compose(b, c))
    for a in els:
        assert g.compose(a, g.identity) == a == g.compose(g.identity, a)
        assert g.compose(a, g.inverse(a)) == g.identity
        assert g.compose(a, b) in g


def test_cyclic_inverse_angle():
    g = CyclicGroup(6)
    assert g.inverse(2) == 4
    assert g.angle(g.inverse(2)) == pytest.approx(TWO_PI * 4 / 6)
    with pytest.raises(ValueError):
        CyclicGroup(0)


def test_product_group_axioms():
    for n, m, r in itertools.product(range(1, 5), repeat=3):
        g = HslGroup.of(n, m, r)
        els = list(g.elements())
        assert len(els) == g.size == n * m * r
        e = g.identity
        for a in els:
            assert g.compose(a, e) == a and g.compose(a, g.inverse(a)) == e
        sample = els[:: max(1, len(els) // 6)]
        for a, b, c in itertools.product(sample, repeat=3):
            assert g.compose(g.compose(a, b), c) == g.compose(a, g.compose(b, c))


# --- covers --------------------------------------------------------------------


@pytest.mark.parametrize("theta, v", [(0.0, 0.5), (np.pi / 2, 1.0), (7 * np.pi / 6, 0.25)])
def test_saturation_projection(theta, v):
    assert cover_project(SATURATION, theta) == pytest.approx(v, abs=1e-12)


@pytest.mark.parametrize("v, theta", [(0.5, 0.0), (1.0, np.pi / 2), (0.25, TWO_PI - np.pi / 6)])
def test_saturation_lift(v, theta):
    assert cover_lift(SATURATION, v) == pytest.approx(theta, abs=1e-12)


@given(st.floats(0.0, 1.0), st.sampled_from([SATURATION, LUMINANCE]))
def test_lift_is_right_inverse(v, cover):
    assert cover.project(cover.lift(v)) == pytest.approx(v, abs=1e-12)


@given(angles, st.sampled_from([SATURATION, LUMINANCE]))
def test_projection_range_and_two_preimages(theta, cover):
    v = float(cover.project(theta))
    assert 0.0 <= v <= 1.0
    t0 = float(cover.lift(v))
    if cover.kind == "saturation":
        partner = np.pi - t0
    else:
        partner = TWO_PI - t0
    assert cover.project(partner) == pytest.approx(v, abs=1e-12)


def test_luminance_projection_is_abs_sine():
    theta = np.linspace(-10, 10, 101)
    np.testing.assert_allclose(LUMINANCE.project(theta), np.abs(np.sin(np.mod(theta, TWO_PI) / 2)), atol=1e-15)


def test_cover_domain_errors():
    for bad in (-0.1, 1.1, np.nan):
        with pytest.raises(DomainError):
            SATURATION.lift(bad)
    with pytest.raises(ValueError):
        CoverMap("hue")


# --- image actions -------------------------------------------------------------


def test_hue_action_examples():
    x = _pix(h=np.pi / 2)
    assert hue_action(0.0, x).data[0, 0, 0] == x.data[0, 0, 0]
    assert hue_action(np.pi / 2, x).data[0, 0, 0] == pytest.approx(np.pi)


@pytest.mark.parametrize("n", [1, 3, 5, 8])
def test_hue_orbit_closes(rng, n):
    x = HslImage(random_hsl(rng))
    y = x
    for _ in range(n):
        y = hue_action(TWO_PI / n, y)
    d = np.abs(np.mod(y.data[0] - x.data[0] + np.pi, TWO_PI) - np.pi)
    assert d.max() <= 1e-9


def test_sat_action_examples():
    x = _pix(s=0.8)
    assert sat_action(0.0, x).data[1, 0, 0] == pytest.approx(0.8, abs=1e-15)
    assert sat_action(np.pi, x).data[1, 0, 0] == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("action", [sat_action, lum_action])
@given(a=angles)
def test_restoration_identity(action, a):
    x = HslImage(random_hsl(np.random.default_rng(1)))
    back = action(TWO_PI - a, action(a, x))
    np.testing.assert_allclose(back.data, x.data, atol=1e-9)


def test_lum_full_cycle(rng):
    x = HslImage(random_hsl(rng))
    np.testing.assert_allclose(lum_action(TWO_PI, x).data, x.data, atol=1e-9)


@given(g=st.tuples(angles, angles, angles), h=st.tuples(angles, angles, angles))
def test_hsl_action_composition(g, h):
    x = HslImage(random_hsl(np.random.default_rng(2)))
    gh = tuple(np.mod(np.add(g, h), TWO_PI))
    a = hsl_action(gh, x)
    b = hsl_action(g, hsl_action(h, x))
    dh = np.abs(np.mod(a.data[0] - b.data[0] + np.pi, TWO_PI) - np.pi)
    assert dh.max() <= 1e-9
    np.testing.assert_allclose(a.data[1:], b.data[1:], atol=1e-9)


def test_hsl_action_identity_and_pure_hue(rng):
    x = HslImage(random_hsl(rng))
    np.testing.assert_allclose(hsl_action((0, 0, 0), x).data, x.data, atol=1e-12)
    np.testing.assert_allclose(hsl_action((1.0, 0, 0), x).data, hue_action(1.0, x).data, atol=1e-12)


def test_group_element_actions_are_exact_on_indices(rng):
    """Index arithmetic and angle arithmetic agree: (g h)-action = g-action after h-action."""
    grp = HslGroup.of(4, 3, 5)
    x = HslImage(random_hsl(rng))
    for g, h in [((1, 2, 3), (3, 2, 4)), ((2, 0, 1), (2, 1, 1))]:
        a = hsl_action(grp.angles(grp.compose(g, h)), x)
        b = hsl_action(grp.angles(g), hsl_action(grp.angles(h), x))
        np.testing.assert_allclose(a.data[1:], b.data[1:], atol=1e-9)


# --- actions on group functions ------------------------------------------------


@pytest.mark.parametrize("n", range(1, 7))
def test_function_action_composition_exhaustive(n):
    f = np.arange(n * 2 * 3, dtype=float).reshape(n, 2, 3)
    assert np.array_equal(function_action("hue", 0, f), f)
    y = f
    for _ in range(n):
        y = function_action("hue", 1 % n, y)
    assert np.array_equal(y, f)
    for a in range(n):
        for b in range(n):
            lhs = function_action("hue", b, function_action("hue", a, f))
            assert np.array_equal(lhs, function_action("hue", (a + b) % n, f))


def test_function_action_convention_and_range():
    f = np.arange(4.0).reshape(1, 4, 1)
    np.testing.assert_array_equal(function_action("sat", 1, f).ravel(), [1, 2, 3, 0])
    with pytest.raises(IndexError):
        function_action("sat", 4, f)
    g = np.arange(24.0).reshape(2, 3, 4)
    out = group_function_action((1, 2, 3), g)
    np.testing.assert_array_equal(out, np.roll(g, (-1, -2, -3), axis=(0, 1, 2)))


def test_lcer_actions():
    f = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
    np.testing.assert_array_equal(lcer_function_action(0, f), f)
    np.testing.assert_array_equal(lcer_function_action(1, f).ravel(), [2, 3, 0])
    np.testing.assert_array_equal(lcer_function_action(-1, f).ravel(), [0, 1, 2])
    x = _pix(s=0.9)
    assert lcer_sat_action(0, x, order=3).data[1, 0, 0] == 0.9
    # order 3: one step is a translation by 0.5, clipped at c
    assert lcer_sat_action(1, x, order=3).data[1, 0, 0] == 1.0


def test_lcer_is_not_a_group_action():
    """Going up then down does not restore a value that was clipped."""
    x = _pix(s=0.9)
    back = lcer_sat_action(-1, lcer_sat_action(1, x, order=3), order=3)
    assert back.data[1, 0, 0] == pytest.approx(0.5)
    f = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
    cycled = f
    for _ in range(3):
        cycled = lcer_function_action(1, cycled)
    assert not np.array_equal(cycled, f)


# --- RGB shift -----------------------------------------------------------------


def test_rgb_shift_examples(rng):
    x = RgbImage(np.array([0.8, 0.3, 0.6]).reshape(3, 1, 1))
    np.testing.assert_allclose(rgb_shift_action((0, 0, 0), x).data, x.data, atol=1e-12)
    y = rgb_shift_action((np.pi, 0, 0), x).data[:, 0, 0]
    np.testing.assert_allclose(y, [0.2, 0.3, 0.6], atol=1e-12)


@given(g=st.tuples(angles, angles, angles), h=st.tuples(angles, angles, angles))
def test_rgb_shift_composition(g, h):
    x = RgbImage(np.random.default_rng(3).uniform(0, 1, (3, 4, 4)))
    a = rgb_shift_action(tuple(np.mod(np.add(g, h), TWO_PI)), x)
    b = rgb_shift_action(g, rgb_shift_action(h, x))
    np.testing.assert_allclose(a.data, b.data, atol=1e-9)


# --- scale ---------------------------------------------------------------------


def test_scale_identity_warp(rng):
    x = RgbImage(rng.uniform(0, 1, (3, 9, 7)))
    np.testing.assert_allclose(scale_action(0.0, x).render().data, x.data, atol=1e-9)
    c = grid_coordinates(9, 7)
    np.testing.assert_allclose(scale_coordinate_map(0.0, c), c, atol=1e-12)


@given(a=angles, b=angles)
def test_scale_composition_on_carried_angles(a, b):
    x = RgbImage(np.zeros((3, 5, 6)))
    two = scale_action(b, scale_action(a, x))
    one = scale_action(np.mod(a + b, TWO_PI), x)
    np.testing.assert_allclose(two.coordinates(), one.coordinates(), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 8, 13])
def test_scale_orbit_closes(n):
    x = RgbImage(np.zeros((3, 6, 6)))
    y = ScaledImage.identity(x)
    for _ in range(n):
        y = scale_action(TWO_PI / n, y)
    np.testing.assert_allclose(y.coordinates(), grid_coordinates(6, 6), atol=1e-12)


def test_scale_angles_rotate():
    t = np.array([0.1, 6.0])
    np.testing.assert_allclose(scale_coordinate_angles(0.5, t), np.mod(t + 0.5, TWO_PI))
