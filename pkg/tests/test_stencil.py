import numpy as np
from numpy.polynomial import polynomial as P
import pytest

from pysdtq.errors import InvalidArgumentError
from pysdtq.grid import GridSpec, ScalarField, ShapeParams, sample_sphere_sdf
from pysdtq.stencil import (StencilSpec, diff, gradient, second_diff, mixed_diff,
                            gradient_magnitude, laplacian, curvature_2d, mean_curvature_3d,
                            singular_mask, weno5, godunov_gradmag, SINGULAR)


SCHEMES = ['forward1', 'backward1', 'central2', 'central4', 'weno5_minus', 'weno5_plus']


def _field(spec, f):
    return ScalarField(spec, f(*spec.mesh()))


def _annulus(spec, center, low, high):
    rho = np.sqrt(sum((x - c) ** 2 for x, c in zip(spec.mesh(), center)))
    return (rho >= low) & (rho <= high)


@pytest.mark.parametrize('scheme', SCHEMES)
def test_linear_fields_are_differentiated_exactly_everywhere(scheme):
    spec = GridSpec((6, 7), 0.5)
    phi = _field(spec, lambda x, y: 2 * x + 3 * y - 1)
    np.testing.assert_allclose(diff(phi, StencilSpec(scheme, 0)).values, 2.0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(diff(phi, StencilSpec(scheme, 1)).values, 3.0, rtol=0, atol=1e-12)


def test_one_sided_and_central_differences():
    phi = ScalarField(GridSpec((5,), 0.5), [0.0, 0.25, 1.0, 2.25, 4.0])
    np.testing.assert_allclose(diff(phi, StencilSpec('forward1')).values[:4], [0.5, 1.5, 2.5, 3.5])
    np.testing.assert_allclose(diff(phi, StencilSpec('backward1')).values[1:], [0.5, 1.5, 2.5, 3.5])
    np.testing.assert_allclose(diff(phi, StencilSpec('central2')).values[1:4], [1.0, 2.0, 3.0])


def test_central4_is_exact_for_quartics_in_the_interior():
    spec = GridSpec((12,), 0.25)
    x = spec.coordinates(0)
    phi = ScalarField(spec, x ** 4 - x ** 3)
    d = diff(phi, StencilSpec('central4')).values
    np.testing.assert_allclose(d[2:-2], (4 * x ** 3 - 3 * x ** 2)[2:-2], rtol=1e-12, atol=1e-12)


def test_gradient_and_magnitude():
    spec = GridSpec((5, 5), 1.0)
    phi = _field(spec, lambda x, y: 3 * x + 4 * y)
    gx, gy = gradient(phi)
    np.testing.assert_allclose(gx.values, 3.0)
    np.testing.assert_allclose(gy.values, 4.0)
    np.testing.assert_allclose(gradient_magnitude(phi).values, 5.0)


def test_second_differences():
    spec = GridSpec((9, 8), 0.5)
    phi = _field(spec, lambda x, y: x ** 2 + x * y - 2 * y ** 2)
    np.testing.assert_allclose(second_diff(phi, 0).values[1:-1], 2.0, atol=1e-12)
    np.testing.assert_allclose(second_diff(phi, 1).values[:, 1:-1], -4.0, atol=1e-12)
    np.testing.assert_allclose(mixed_diff(phi, 0, 1).values[1:-1, 1:-1], 1.0, atol=1e-12)
    np.testing.assert_allclose(laplacian(phi).values[1:-1, 1:-1], -2.0, atol=1e-12)


def test_fourth_order_second_differences():
    spec = GridSpec((12, 12), 0.25)
    phi = _field(spec, lambda x, y: x ** 5 + x ** 3 * y ** 3)
    x, y = spec.mesh()
    inner = (slice(2, -2), slice(2, -2))
    np.testing.assert_allclose(second_diff(phi, 0, order=4).values[inner],
                               (20 * x ** 3 + 6 * x * y ** 3)[inner], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(mixed_diff(phi, 0, 1, order=4).values[inner],
                               (9 * x ** 2 * y ** 2)[inner], rtol=1e-9, atol=1e-9)


def test_order_must_be_2_or_4():
    phi = ScalarField(GridSpec((8,)), np.arange(8.0))
    with pytest.raises(InvalidArgumentError):
        second_diff(phi, 0, order=3)


@pytest.mark.parametrize('scheme, cells', [('central2', 1), ('central4', 2), ('weno5_minus', 3)])
def test_too_few_cells(scheme, cells):
    phi = ScalarField(GridSpec((cells, 8)), np.zeros((cells, 8)))
    with pytest.raises(InvalidArgumentError):
        diff(phi, StencilSpec(scheme, 0))
    diff(phi, StencilSpec(scheme, 1))


def test_bad_axis_and_scheme():
    phi = ScalarField(GridSpec((8,)), np.zeros(8))
    with pytest.raises(InvalidArgumentError):
        diff(phi, StencilSpec('central2', 1))
    with pytest.raises(InvalidArgumentError):
        StencilSpec('upwind3')
    with pytest.raises(InvalidArgumentError):
        weno5(phi, 0, 'left')


def test_curvature_of_a_circle():
    spec = GridSpec((101, 101), 0.1)
    phi = sample_sphere_sdf(spec, ShapeParams.sphere((5.0, 5.0), 2.5))
    rho = phi.values + 2.5
    ring = _annulus(spec, (5.0, 5.0), 2.0, 4.0)
    for order in (2, 4):
        kappa = curvature_2d(phi, order).values
        np.testing.assert_allclose(kappa[ring], 1 / rho[ring], rtol=0.02)


def test_mean_curvature_of_a_sphere():
    spec = GridSpec((41, 41, 41), 0.25)
    phi = sample_sphere_sdf(spec, ShapeParams.sphere((5.0, 5.0, 5.0), 3.0))
    rho = phi.values + 3.0
    shell = _annulus(spec, (5.0, 5.0, 5.0), 2.0, 4.0)
    for order, rtol in ((2, 0.05), (4, 0.02)):
        kappa = mean_curvature_3d(phi, order).values
        np.testing.assert_allclose(kappa[shell], 2 / rho[shell], rtol=rtol)


def test_curvature_dimension_checks():
    with pytest.raises(InvalidArgumentError):
        curvature_2d(ScalarField(GridSpec((4, 4, 4)), np.zeros(64)))
    with pytest.raises(InvalidArgumentError):
        mean_curvature_3d(ScalarField(GridSpec((4, 4)), np.zeros(16)))


def test_flat_field_curvature_is_singular():
    phi = ScalarField(GridSpec((6, 6)), np.full((6, 6), 2.0))
    kappa = curvature_2d(phi)
    assert np.all(kappa.values == SINGULAR)
    assert singular_mask(kappa).all()


def test_weno5_on_a_kink_stays_bounded():
    spec = GridSpec((21,), 0.5)
    phi = ScalarField(spec, np.abs(spec.coordinates(0) - 5.0))
    for side in ('minus', 'plus'):
        d = weno5(phi, 0, side).values
        assert np.all(np.abs(d) <= 1.0 + 1e-9)
    # far from the kink both sides are exact
    np.testing.assert_allclose(weno5(phi, 0, 'minus').values[:6], -1.0, atol=1e-12)
    np.testing.assert_allclose(weno5(phi, 0, 'plus').values[-6:], 1.0, atol=1e-12)


def test_godunov_selects_upwind_differences():
    spec = GridSpec((3,))
    minus = [ScalarField(spec, [-2.0, 1.0, 0.5])]
    plus = [ScalarField(spec, [3.0, -1.0, 2.0])]
    positive = godunov_gradmag(minus, plus, ScalarField(spec, [1.0, 1.0, 1.0])).values
    negative = godunov_gradmag(minus, plus, ScalarField(spec, [-1.0, -1.0, -1.0])).values
    zero = godunov_gradmag(minus, plus, ScalarField(spec, [0.0, 0.0, 0.0])).values
    np.testing.assert_allclose(positive, [0.0, 1.0, 0.5])
    np.testing.assert_allclose(negative, [3.0, 0.0, 2.0])
    np.testing.assert_array_equal(zero, 0.0)


def test_godunov_sums_over_axes():
    spec = GridSpec((2, 2))
    minus = [ScalarField(spec, np.full((2, 2), 3.0)), ScalarField(spec, np.full((2, 2), 4.0))]
    plus = [ScalarField(spec, np.full((2, 2), 3.0)), ScalarField(spec, np.full((2, 2), 4.0))]
    s = ScalarField(spec, np.ones((2, 2)))
    np.testing.assert_allclose(godunov_gradmag(minus, plus, s).values, 5.0)
    with pytest.raises(InvalidArgumentError):
        godunov_gradmag(minus[:1], plus, s)


# (scheme or second difference order, polynomial degree it is exact for, interior margin)
EXACTNESS = [('central2', 2, 1), ('central4', 4, 2), (2, 3, 1), (4, 5, 2)]


@pytest.mark.parametrize('seed', [0, 1, 2])
@pytest.mark.parametrize('method, degree, margin', EXACTNESS)
def test_exactness_on_random_polynomials(seed, method, degree, margin):
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1, 1, degree + 1)
    spec = GridSpec((16,), 0.25)
    x = spec.coordinates(0)
    phi = ScalarField(spec, P.polyval(x, coef))
    if isinstance(method, str):
        d = diff(phi, StencilSpec(method)).values
        expected = P.polyval(x, P.polyder(coef))
    else:
        d = second_diff(phi, 0, order=method).values
        expected = P.polyval(x, P.polyder(coef, 2))
    inner = slice(margin, -margin)
    np.testing.assert_allclose(d[inner], expected[inner], rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize('scheme', ['forward1', 'backward1', 'central2', 'central4'])
def test_differences_are_linear(scheme):
    rng = np.random.default_rng(5)
    spec = GridSpec((9, 10), 0.5)
    phi = ScalarField(spec, rng.uniform(-1, 1, spec.dims))
    psi = ScalarField(spec, rng.uniform(-1, 1, spec.dims))
    a, b = 2.5, -0.75
    for axis in (0, 1):
        s = StencilSpec(scheme, axis)
        combined = diff(phi.like(a * phi.values + b * psi.values), s).values
        expected = a * diff(phi, s).values + b * diff(psi, s).values
        np.testing.assert_allclose(combined, expected, rtol=1e-12, atol=1e-12 * np.max(np.abs(expected)))


def test_godunov_gradmag_of_a_sphere_sdf_is_one():
    spec = GridSpec((41, 41), 0.25)
    phi = sample_sphere_sdf(spec, ShapeParams.sphere((5.0, 5.0), 2.5))
    minus = [weno5(phi, axis, 'minus') for axis in (0, 1)]
    plus = [weno5(phi, axis, 'plus') for axis in (0, 1)]
    g = godunov_gradmag(minus, plus, phi).values
    # cells exactly on the circle have no upwind direction
    region = _annulus(spec, (5.0, 5.0), 1.0, 4.0) & (phi.values != 0)
    assert np.max(np.abs(g - 1.0)[region]) < 0.05
