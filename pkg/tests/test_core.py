import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbv.core import (
    AlphaParam,
    Ball,
    Box,
    CellBudgetError,
    CellSet,
    Difference,
    Grid,
    HalfSpace,
    Intersection,
    ScalarField,
    ShapeFormatError,
    Union,
    VectorTestField,
    build_grid,
    moment_integral,
    mollify,
    psum,
    rasterize,
    shape_from_dict,
    weight_field,
)


def test_build_grid_2d():
    g = build_grid(2, 1.0, 4)
    assert g.spacing == 0.5
    assert g.size == 16
    np.testing.assert_allclose(g.cell_center((0, 0)), [-0.75, -0.75])


def test_build_grid_1d_centers():
    g = build_grid(1, 2.0, 8)
    assert g.spacing == 0.5
    np.testing.assert_allclose(g.axis_centers(0), np.arange(-1.75, 1.76, 0.5))


def test_grid_budget_refusal():
    with pytest.raises(CellBudgetError):
        build_grid(3, 1.0, 2**9)


def test_budget_env_override(monkeypatch):
    monkeypatch.setenv("HBV_CELL_BUDGET", "100")
    with pytest.raises(CellBudgetError):
        build_grid(2, 1.0, 11)
    assert build_grid(2, 1.0, 10).size == 100


@pytest.mark.parametrize("bad", [0.99, 0.0, -2.0, float("nan")])
def test_alpha_validation(bad):
    with pytest.raises(ValueError):
        AlphaParam(bad)


def test_rasterize_examples():
    g = build_grid(2, 1.0, 16)
    assert rasterize(Ball((0.0, 0.0), 10.0), g).count == g.size
    assert rasterize(Ball((0.0, 0.0), 0.0), g).is_empty()
    box, ball = Box((-0.6, -0.4), (0.7, 0.5)), Ball((0.1, 0.0), 0.45)
    total = rasterize(Difference(box, ball), g).volume() + rasterize(Intersection((box, ball)), g).volume()
    assert total == rasterize(box, g).volume()


def test_membership_by_center():
    g = Grid(1, (4,), 1.0, (0.0,))  # centers 0.5 .. 3.5
    S = rasterize(Box((0.5,), (2.0,)), g)
    assert S.mask.tolist() == [True, True, False, False]
    assert rasterize(HalfSpace((1.0,), 1.5), g).mask.tolist() == [True, True, False, False]


def test_weight_field_values():
    g1 = build_grid(2, 1.0, 8)
    assert not np.any(weight_field(g1, 1.0).values)
    g = Grid(2, (1, 1), 1.0, (2.5, 3.5))
    assert weight_field(g, 2.0).values[0, 0] == pytest.approx(5.0, rel=1e-14)
    g = Grid(2, (1, 1), 1.0, (3.5, -0.5))
    assert weight_field(g, 3.0).values[0, 0] == pytest.approx(8 * math.sqrt(2), rel=1e-14)


def test_weight_field_radial_symmetry():
    g = build_grid(2, 1.0, 20)
    w = weight_field(g, 3.0).values
    for t in (w[::-1, :], w[:, ::-1], w.T):
        np.testing.assert_allclose(t, w, rtol=1e-14, atol=0)


def test_moment_ball_closed_form_and_quadrature():
    b = Ball((0.0, 0.0), 1.0)
    assert moment_integral(b, 2.0) == pytest.approx(2 * math.pi / 3, rel=1e-13)
    g = build_grid(2, 1.5, 384)  # h = 1/128
    quad = moment_integral(b, 2.0, g, method="grid")
    assert abs(quad - 2 * math.pi / 3) <= 5 * g.spacing * 2 * math.pi / 3
    assert moment_integral(b, 1.0) == pytest.approx(4 * math.pi / 5, rel=1e-13)


def test_moment_empty_and_box():
    assert moment_integral(Ball((0.0, 0.0), 0.0), 2.0) == 0.0
    # |x| over [0,1]^2: (sqrt2 + asinh 1) / 3
    exact = (math.sqrt(2) + math.asinh(1.0)) / 3
    assert moment_integral(Box((0.0, 0.0), (1.0, 1.0)), 2.0) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("h_exp", [5, 6])
def test_moment_quadrature_within_first_order(h_exp):
    n = 3 * 2**h_exp
    g = build_grid(2, 1.5, n)
    for alpha in (2.0, 3.0):
        exact = moment_integral(Ball((0.0, 0.0), 1.0), alpha)
        quad = moment_integral(Ball((0.0, 0.0), 1.0), alpha, g, method="grid")
        assert abs(quad - exact) <= 5 * g.spacing * exact


def test_mollify_constant_and_mass(rng):
    g = build_grid(2, 1.0, 32)
    c = ScalarField(g, np.full(g.shape, 3.25))
    np.testing.assert_allclose(mollify(c, 0.2).values, 3.25, rtol=1e-14)
    for _ in range(5):
        f = ScalarField(g, rng.normal(size=g.shape))
        before, after = f.integral(), mollify(f, 0.15).integral()
        assert abs(after - before) <= 1e-10 * max(1.0, f.l1())


def test_mollify_refuses_small_radius():
    g = build_grid(2, 1.0, 32)
    with pytest.raises(ValueError):
        mollify(ScalarField(g, np.zeros(g.shape)), 0.5 * g.spacing)


def test_mollify_approximate_identity():
    g = build_grid(2, 1.0, 64)
    f = rasterize(HalfSpace((1.0, 0.0), 0.0), g).indicator()
    errs = [ScalarField(g, mollify(f, R).values - f.values).l1() for R in (0.5, 0.25, 0.125, 0.0625)]
    # the L1 error is linear in the radius: halving R halves it
    assert all(b <= 0.55 * a for a, b in zip(errs, errs[1:]))


def test_fields_are_read_only():
    g = build_grid(2, 1.0, 4)
    f = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    S = CellSet.full(g)
    with pytest.raises(ValueError):
        S.mask[0, 0] = False


def test_superlevel_is_strict():
    g = build_grid(1, 1.0, 4)
    f = ScalarField(g, np.array([0.0, 0.5, 0.5, 1.0]))
    assert f.superlevel(0.5).mask.tolist() == [False, False, False, True]


def test_vector_field_norm_guard():
    g = build_grid(1, 1.0, 3)
    with pytest.raises(ValueError):
        VectorTestField(g, np.full((2, 3), 0.8))
    v = VectorTestField.project(g, np.full((2, 3), 0.8))
    assert np.all(np.sqrt(np.sum(v.components**2, axis=0)) <= 1 + 1e-15)


def test_shape_from_dict_errors():
    with pytest.raises(ShapeFormatError):
        shape_from_dict({"radius": 1})
    with pytest.raises(ShapeFormatError):
        shape_from_dict({"variant": "torus"})


masks = st.integers(0, 2**16 - 1).map(lambda k: np.array([(k >> i) & 1 for i in range(16)], bool).reshape(4, 4))


@given(masks, masks)
def test_volume_additivity(a, b):
    # dyadic spacing keeps count * h^d exact, so the identity is bitwise
    g = Grid(2, (4, 4), 0.375, (-0.75, -0.75))
    E, F = CellSet(g, a), CellSet(g, b)
    assert (E | F).count + (E & F).count == E.count + F.count
    assert (E | F).volume() + (E & F).volume() == E.volume() + F.volume()


@given(masks, masks)
def test_set_algebra(a, b):
    g = Grid(2, (4, 4), 0.5, (-1.0, -1.0))
    E, F = CellSet(g, a), CellSet(g, b)
    assert (E & F).issubset(E) and E.issubset(E | F)
    assert ~(E | F) == (~E & ~F)
    assert (E - F) == (E & ~F)
    assert E.dilate(1).issubset(E.dilate(2)) and E.issubset(E.dilate(1))


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_psum_bit_identical(xs):
    a = psum(xs)
    assert psum(list(xs)) == a
    assert psum(np.array(xs).reshape(-1, 1)) == a


coords = st.floats(-1.5, 1.5)


@given(coords, coords, st.floats(0.01, 1.0), st.floats(0.1, 3.0))
def test_shape_roundtrip_and_scaling(cx, cy, r, s):
    b = Ball((cx, cy), r)
    shape = Union((b, Box((cx - r, cy), (cx, cy + r))))
    again = shape_from_dict(shape.to_dict())
    g = build_grid(2, 2.0, 16)
    assert rasterize(again, g) == rasterize(shape, g)
    x = np.array([[cx * s], [cy * s]])
    assert bool(shape.scaled(s).contains(x)[0]) == bool(shape.contains(x / s)[0])
