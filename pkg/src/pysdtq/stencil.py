import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import ScalarField


log = logging.getLogger(__name__)

# Ghost cells added per side before any stencil is applied.
GHOST = 3

# Halo each scheme reads beyond a cell.
HALO = {
    'forward1': 1,
    'backward1': 1,
    'central2': 1,
    'central4': 2,
    'weno5_minus': 3,
    'weno5_plus': 3,
}

# Regularization of the WENO smoothness indicators.
WENO_EPSILON = 1e-6

# Curvature value of cells where the gradient vanishes (medial axis).
SINGULAR = 1e300
SINGULAR_GRADIENT = 1e-8


#
@dataclass(frozen=True)
class StencilSpec:
    '''
    A first derivative scheme along one axis.

    Attributes:

    scheme : 'forward1', 'backward1', 'central2', 'central4',
             'weno5_minus' or 'weno5_plus'.
    axis : axis to differentiate along.
    '''
    scheme: str
    axis: int = 0

    def __post_init__(self):
        if self.scheme not in HALO:
            raise InvalidArgumentError(f'unknown scheme {self.scheme!r}, expected one of {tuple(HALO)}')

    @property
    def halo(self):
        return HALO[self.scheme]


#
def _check_axis(phi,axis,halo):
    if not 0 <= axis < phi.spec.ndim:
        raise InvalidArgumentError(f'axis {axis} out of range for a {phi.spec.ndim}D field')
    n = phi.spec.dims[axis]
    if n < halo + 1:
        raise InvalidArgumentError(f'field has {n} cells along axis {axis}, stencil needs at least {halo + 1}')


#
def _extend(values,axis):
    '''
    Pads GHOST cells on both sides of an axis by linear extrapolation
    of the one-sided first difference at each edge. Linear fields stay linear.
    '''
    v = np.moveaxis(values, axis, -1)
    left_slope = (v[..., 1] - v[..., 0])[..., np.newaxis]
    right_slope = (v[..., -1] - v[..., -2])[..., np.newaxis]
    steps = np.arange(1, GHOST + 1, dtype=np.float64)
    left = v[..., :1] - left_slope * steps[::-1]
    right = v[..., -1:] + right_slope * steps
    return np.moveaxis(np.concatenate([left, v, right], axis=-1), -1, axis)


#
def _shift(ext,axis,offset,n):
    '''
    View of the extended array holding phi(x + offset*h) for every cell.
    '''
    index = [slice(None)] * ext.ndim
    index[axis] = slice(GHOST + offset, GHOST + offset + n)
    return ext[tuple(index)]


#
def _difference(values,axis,scheme,h):
    n = values.shape[axis]
    ext = _extend(values, axis)

    def at(k):
        return _shift(ext, axis, k, n)

    match scheme:
        case 'forward1':
            return (at(1) - at(0)) / h
        case 'backward1':
            return (at(0) - at(-1)) / h
        case 'central2':
            return (at(1) - at(-1)) / (2 * h)
        case 'central4':
            return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)
        case 'weno5_minus':
            return _weno5(ext, axis, n, h, 'minus')
        case 'weno5_plus':
            return _weno5(ext, axis, n, h, 'plus')


#
def diff(phi,spec):
    '''
    First finite difference of a field.

    forward1  : (phi(x+h) - phi(x)) / h
    backward1 : (phi(x) - phi(x-h)) / h
    central2  : (phi(x+h) - phi(x-h)) / (2h)
    central4  : (-phi(x+2h) + 8phi(x+h) - 8phi(x-h) + phi(x-2h)) / (12h)
    weno5_*   : see weno5()

    Parameters:

    phi : ScalarField
    spec : StencilSpec

    Returns:

    ScalarField
    '''
    _check_axis(phi, spec.axis, spec.halo)
    return phi.like(_difference(phi.values, spec.axis, spec.scheme, phi.spec.spacing))


#
def gradient(phi,scheme='central2'):
    '''
    The per-axis first differences of a field, as a list of ScalarFields.
    '''
    return [diff(phi, StencilSpec(scheme, axis)) for axis in range(phi.spec.ndim)]


#
def _second(values,axis,h,order):
    n = values.shape[axis]
    ext = _extend(values, axis)

    def at(k):
        return _shift(ext, axis, k, n)

    if order == 2:
        return (at(1) - 2 * at(0) + at(-1)) / (h * h)
    return (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * h * h)


#
def _first_scheme(order):
    match order:
        case 2:
            return 'central2'
        case 4:
            return 'central4'
        case _:
            raise InvalidArgumentError(f'order must be 2 or 4, got {order}')


#
def second_diff(phi,axis,order=2):
    '''
    Second derivative along an axis, D^xx = (phi(x+h) - 2phi(x) + phi(x-h)) / h^2.
    With order=4 the five point stencil
    (-phi(x+2h) + 16phi(x+h) - 30phi(x) + 16phi(x-h) - phi(x-2h)) / (12h^2) is used.
    '''
    scheme = _first_scheme(order)
    _check_axis(phi, axis, HALO[scheme])
    return phi.like(_second(phi.values, axis, phi.spec.spacing, order))


#
def mixed_diff(phi,axis_a,axis_b,order=2):
    '''
    Mixed derivative D^ab: the central difference along axis_a of the
    central difference along axis_b (central4 of central4 with order=4).
    '''
    scheme = _first_scheme(order)
    _check_axis(phi, axis_a, HALO[scheme])
    _check_axis(phi, axis_b, HALO[scheme])
    h = phi.spec.spacing
    inner = _difference(phi.values, axis_b, scheme, h)
    return phi.like(_difference(inner, axis_a, scheme, h))


#
def gradient_magnitude(phi,scheme='central2'):
    '''
    |D phi| = sqrt(sum over axes of (D^i phi)^2) under the given scheme.
    '''
    return phi.like(np.sqrt(sum(g.values ** 2 for g in gradient(phi, scheme))))


#
def laplacian(phi,order=2):
    '''
    Sum of the second derivatives over all axes.
    '''
    return phi.like(sum(second_diff(phi, a, order).values for a in range(phi.spec.ndim)))


#
def _guarded(phi,numerator,grad_sq):
    norm = np.sqrt(grad_sq)
    singular = norm < SINGULAR_GRADIENT
    safe = np.where(singular, 1.0, norm)
    kappa = np.where(singular, SINGULAR, numerator / safe ** 3)
    if singular.any():
        log.debug('%d singular curvature cells', int(np.count_nonzero(singular)))
    return phi.like(kappa)


#
def curvature_2d(phi,order=2):
    '''
    Curvature of the level sets of a 2D field,

    kappa = (phi_y^2 phi_xx - 2 phi_x phi_y phi_xy + phi_x^2 phi_yy) / (phi_x^2 + phi_y^2)^(3/2)

    with derivatives replaced by central differences. Cells where the
    gradient magnitude is below 1e-8 hold the SINGULAR sentinel.
    '''
    if phi.spec.ndim != 2:
        raise InvalidArgumentError(f'curvature_2d needs a 2D field, got {phi.spec.ndim}D')
    scheme = _first_scheme(order)
    px, py = (g.values for g in gradient(phi, scheme))
    pxx = second_diff(phi, 0, order).values
    pyy = second_diff(phi, 1, order).values
    pxy = mixed_diff(phi, 0, 1, order).values
    numerator = py * py * pxx - 2 * px * py * pxy + px * px * pyy
    return _guarded(phi, numerator, px * px + py * py)


#
def mean_curvature_3d(phi,order=2):
    '''
    Mean curvature of the level sets of a 3D field, div(grad phi / |grad phi|),
    the sum of the principal curvatures (2/r on a sphere of radius r).
    Cells where the gradient magnitude is below 1e-8 hold the SINGULAR sentinel.
    '''
    if phi.spec.ndim != 3:
        raise InvalidArgumentError(f'mean_curvature_3d needs a 3D field, got {phi.spec.ndim}D')
    scheme = _first_scheme(order)
    g = [d.values for d in gradient(phi, scheme)]
    hxx, hyy, hzz = (second_diff(phi, a, order).values for a in range(3))
    hxy = mixed_diff(phi, 0, 1, order).values
    hxz = mixed_diff(phi, 0, 2, order).values
    hyz = mixed_diff(phi, 1, 2, order).values
    px, py, pz = g
    numerator = ((py * py + pz * pz) * hxx + (px * px + pz * pz) * hyy + (px * px + py * py) * hzz
                 - 2 * (px * py * hxy + px * pz * hxz + py * pz * hyz))
    return _guarded(phi, numerator, px * px + py * py + pz * pz)


#
def singular_mask(kappa):
    '''
    Cells of a curvature field holding the SINGULAR sentinel.
    '''
    return kappa.values >= SINGULAR


#
def _weno5(ext,axis,n,h,side):
    dd = np.diff(ext, axis=axis) / h

    def v(k):
        index = [slice(None)] * dd.ndim
        index[axis] = slice(k, k + n)
        return dd[tuple(index)]

    # dd[j + 3] is the forward difference at cell j.
    if side == 'minus':
        v1, v2, v3, v4, v5 = v(0), v(1), v(2), v(3), v(4)
    else:
        v1, v2, v3, v4, v5 = v(5), v(4), v(3), v(2), v(1)

    p1 = v1 / 3 - 7 * v2 / 6 + 11 * v3 / 6
    p2 = -v2 / 6 + 5 * v3 / 6 + v4 / 3
    p3 = v3 / 3 + 5 * v4 / 6 - v5 / 6

    s1 = 13 / 12 * (v1 - 2 * v2 + v3) ** 2 + 1 / 4 * (v1 - 4 * v2 + 3 * v3) ** 2
    s2 = 13 / 12 * (v2 - 2 * v3 + v4) ** 2 + 1 / 4 * (v2 - v4) ** 2
    s3 = 13 / 12 * (v3 - 2 * v4 + v5) ** 2 + 1 / 4 * (3 * v3 - 4 * v4 + v5) ** 2

    a1 = 0.1 / (s1 + WENO_EPSILON) ** 2
    a2 = 0.6 / (s2 + WENO_EPSILON) ** 2
    a3 = 0.3 / (s3 + WENO_EPSILON) ** 2
    total = a1 + a2 + a3
    return (a1 * p1 + a2 * p2 + a3 * p3) / total


#
def weno5(phi,axis,side):
    '''
    Fifth order WENO one-sided first derivative.

    Parameters:

    phi : ScalarField, at least 4 cells along axis.
    axis : axis to differentiate along.
    side : 'minus' (left-biased, D^-) or 'plus' (right-biased, D^+).

    Returns:

    ScalarField
    '''
    if side not in ('minus', 'plus'):
        raise InvalidArgumentError(f"side must be 'minus' or 'plus', got {side!r}")
    return diff(phi, StencilSpec(f'weno5_{side}', axis))


#
def godunov_gradmag(minus_diffs,plus_diffs,sign_field):
    '''
    Godunov upwind approximation of |grad phi|.

    Per axis, with a the backward (minus) and b the forward (plus) difference:

    sign > 0 : max(max(a,0)^2, min(b,0)^2)
    sign < 0 : max(min(a,0)^2, max(b,0)^2)
    sign = 0 : 0

    Parameters:

    minus_diffs : per-axis ScalarFields of backward differences.
    plus_diffs : per-axis ScalarFields of forward differences.
    sign_field : ScalarField whose sign selects the upwind direction.

    Returns:

    ScalarField, the square root of the summed contributions.
    '''
    spec = sign_field.spec
    if len(minus_diffs) != spec.ndim or len(plus_diffs) != spec.ndim:
        raise InvalidArgumentError(
            f'need {spec.ndim} minus and plus differences, got {len(minus_diffs)} and {len(plus_diffs)}')
    if any(not f.spec.same_as(spec) for f in list(minus_diffs) + list(plus_diffs)):
        raise InvalidArgumentError('difference fields and sign field are on different grids')
    s = sign_field.values
    total = np.zeros(spec.dims)
    for minus, plus in zip(minus_diffs, plus_diffs):
        a, b = minus.values, plus.values
        positive = np.maximum(np.maximum(a, 0) ** 2, np.minimum(b, 0) ** 2)
        negative = np.maximum(np.minimum(a, 0) ** 2, np.maximum(b, 0) ** 2)
        total += np.where(s > 0, positive, np.where(s < 0, negative, 0.0))
    return sign_field.like(np.sqrt(total))
