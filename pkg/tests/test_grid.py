import numpy as np
import pytest

from pysdtq.errors import InvalidArgumentError
from pysdtq.grid import (GridSpec, ScalarField, BinaryField, ShapeParams, sample_sphere_sdf,
                         sample_sphere_gradient, sample_sphere_hessian, rasterize, binarize)


def test_gridspec_defaults_and_coordinates():
    spec = GridSpec((3,), 0.5, (1.0,))
    assert spec.ndim == 1
    assert spec.size == 3
    assert spec.h == 0.5
    np.testing.assert_array_equal(spec.coordinates(0), [1.0, 1.5, 2.0])
    assert GridSpec((2, 3)).origin == (0.0, 0.0)
    assert spec.coordinate((2,)) == (2.0,)


def test_gridspec_mesh_is_ij_indexed():
    x, y = GridSpec((2, 3), 1.0).mesh()
    assert x.shape == (2, 3)
    np.testing.assert_array_equal(x[:, 0], [0.0, 1.0])
    np.testing.assert_array_equal(y[0, :], [0.0, 1.0, 2.0])


@pytest.mark.parametrize('dims, spacing, origin', [
    ((0,), 1.0, None),
    ((2, 2, 2, 2), 1.0, None),
    ((3,), 0.0, None),
    ((3,), -1.0, None),
    ((3,), float('nan'), None),
    ((3, 3), 1.0, (0.0,)),
    ((2.5, 3), 1.0, None),
    (('four',), 1.0, None),
])
def test_gridspec_rejects_bad_lattices(dims, spacing, origin):
    with pytest.raises(InvalidArgumentError):
        GridSpec(dims, spacing, origin)


def test_gridspec_equality():
    assert GridSpec((4, 4), 0.5) == GridSpec([4, 4], 0.5, (0.0, 0.0))
    assert GridSpec((4, 4), 0.5) != GridSpec((4, 4), 0.25)
    assert len({GridSpec((4,)), GridSpec((4,))}) == 1


def test_scalar_field_is_read_only_and_reshapes():
    spec = GridSpec((2, 3))
    f = ScalarField(spec, range(6))
    assert f.values.shape == (2, 3)
    assert f.values.dtype == np.float64
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_scalar_field_rejects_non_finite_and_wrong_size():
    spec = GridSpec((2,))
    with pytest.raises(InvalidArgumentError):
        ScalarField(spec, [0.0, np.inf])
    with pytest.raises(InvalidArgumentError):
        ScalarField(spec, [0.0, 1.0, 2.0])


def test_binary_field():
    b = BinaryField(GridSpec((4,)), [0, 1, 1, 0])
    assert b.count() == 2
    np.testing.assert_array_equal(b.background, [True, False, False, True])
    with pytest.raises(InvalidArgumentError):
        BinaryField(GridSpec((2,)), [0, 2])


def test_sphere_sdf_1d():
    spec = GridSpec((11,), 1.0)
    phi = sample_sphere_sdf(spec, ShapeParams.sphere((5.0,), 2.25))
    np.testing.assert_allclose(phi.values, np.abs(np.arange(11) - 5.0) - 2.25)


def test_sphere_gradient_is_unit_except_at_center():
    spec = GridSpec((11, 11), 1.0)
    gx, gy = sample_sphere_gradient(spec, ShapeParams.sphere((5.0, 5.0), 2.0))
    norm = np.hypot(gx.values, gy.values)
    assert norm[5, 5] == 0.0
    norm[5, 5] = 1.0
    np.testing.assert_allclose(norm, 1.0)
    assert gx.values[8, 5] == 1.0
    assert gy.values[5, 2] == -1.0


def test_sphere_hessian_trace_is_inverse_radius():
    spec = GridSpec((11, 11), 1.0)
    shape = ShapeParams.sphere((5.0, 5.0), 2.0)
    hessian = sample_sphere_hessian(spec, shape)
    assert set(hessian) == {(0, 0), (0, 1), (1, 1)}
    trace = hessian[(0, 0)].values + hessian[(1, 1)].values
    # cell (8, 9) is at distance 5 from the center
    assert trace[8, 9] == pytest.approx(1 / 5)
    assert hessian[(0, 1)].values[8, 9] == pytest.approx(-0.6 * 0.8 / 5)


def test_sphere_center_must_match_grid():
    with pytest.raises(InvalidArgumentError):
        sample_sphere_sdf(GridSpec((5, 5)), ShapeParams.sphere((1.0,), 1.0))


@pytest.mark.parametrize('radius', [0.0, -1.0, float('inf')])
def test_sphere_radius_must_be_positive(radius):
    with pytest.raises(InvalidArgumentError):
        ShapeParams.sphere((0.0,), radius)


def test_rasterize_sphere_1d():
    b = rasterize(GridSpec((11,)), ShapeParams.sphere((5.0,), 2.25))
    np.testing.assert_array_equal(np.flatnonzero(b.values), [3, 4, 5, 6, 7])


def test_rasterize_polygon_excludes_edges():
    square = ShapeParams.polygon([(1, 1), (1, 4), (4, 4), (4, 1)])
    b = rasterize(GridSpec((6, 6)), square)
    expected = np.zeros((6, 6), dtype=bool)
    expected[2:4, 2:4] = True
    np.testing.assert_array_equal(b.values, expected)


def test_rasterize_polygon_needs_2d():
    triangle = ShapeParams.polygon([(0, 0), (1, 0), (0, 1)])
    with pytest.raises(InvalidArgumentError):
        rasterize(GridSpec((6,)), triangle)


def test_polygon_needs_three_vertices():
    with pytest.raises(InvalidArgumentError):
        ShapeParams.polygon([(0, 0), (1, 0)])


@pytest.mark.parametrize('vertices', [
    [(0, 0), (4, 0), (4,)],
    [(0, 0, 1), (4, 0), (4, 4)],
    [1, 2, 3],
])
def test_polygon_vertices_have_two_coordinates(vertices):
    with pytest.raises(InvalidArgumentError):
        ShapeParams.polygon(vertices)


def test_integral_float_dims_are_accepted():
    assert GridSpec((4.0, np.int64(3))).dims == (4, 3)
    assert GridSpec(5).dims == (5,)


def test_binarize_treats_zero_as_background():
    phi = ScalarField(GridSpec((3,)), [-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(binarize(phi).values, [True, False, False])
