import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import ScalarField, BinaryField
from .dt import Metric, feature_transform
from .stencil import StencilSpec, diff


log = logging.getLogger(__name__)

# Lattice distances closer than this are the same level.
LEVEL_TOLERANCE = 1e-12

CONVENTIONS = ('raw', 'corrected_sdt')


#
@dataclass(frozen=True, eq=False)
class LevelSet:
    '''
    The values a lattice distance transform can take: every distinct
    l = g(z, 0) <= cutoff over integer offsets z. A transform on a grid of
    spacing h only ever produces the values h*l.

    Attributes:

    metric : Metric
    ndim : number of lattice axes.
    levels : sorted distinct levels, starting at 0.
    cutoff : l_max.
    h : spacing the physical levels h*l refer to.
    '''
    metric: Metric
    ndim: int
    levels: np.ndarray
    cutoff: float
    h: float = 1.0

    #
    def contains(self,values,tolerance=1e-9):
        '''
        Element-wise membership of dimensionless values in the level set.
        '''
        return _nearest_distance(self.levels, np.asarray(values, dtype=np.float64)) <= tolerance


#
def _dedupe(sorted_values):
    if sorted_values.size == 0:
        return sorted_values
    keep = np.concatenate([[True], np.diff(sorted_values) > LEVEL_TOLERANCE])
    return sorted_values[keep]


#
def _nearest_distance(levels,x):
    idx = np.searchsorted(levels, x)
    below = levels[np.clip(idx - 1, 0, levels.size - 1)]
    above = levels[np.clip(idx, 0, levels.size - 1)]
    return np.minimum(np.abs(x - below), np.abs(x - above))


#
def enumerate_levels(metric,ndim,l_max,h=1.0):
    '''
    Enumerates the reachable levels {g(z,0) | z in Z^ndim, g(z,0) <= l_max}.

    Parameters:

    metric : Metric
    ndim : 1, 2 or 3.
    l_max : cutoff, > 0.
    h : spacing recorded in the LevelSet.

    Returns:

    LevelSet
    '''
    if not l_max > 0:
        raise InvalidArgumentError(f'l_max must be > 0, got {l_max}')
    if not 1 <= ndim <= 3:
        raise InvalidArgumentError(f'ndim must be 1 to 3, got {ndim}')
    # Every metric here bounds g(z,0) below by max|z_i|, and is symmetric
    # under sign changes, so the non-negative box of side ceil(l_max) holds all levels.
    side = int(np.ceil(l_max))
    axes = [np.arange(side + 1)] * ndim
    z = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, ndim)
    g = metric.lattice_distance(z)
    g = np.sort(g[g <= l_max + LEVEL_TOLERANCE])
    levels = _dedupe(g)
    log.debug('%d %s levels up to %g in %dD', levels.size, metric.kind, l_max, ndim)
    return LevelSet(metric, ndim, levels, float(l_max), float(h))


#
def enumerate_differences(ls):
    '''
    The set {g(p,0) - g(q,0)} over the levels of a LevelSet: every value
    a first difference of a quantized distance transform can take.

    Returns:

    sorted numpy array of distinct differences.
    '''
    d = (ls.levels[:, np.newaxis] - ls.levels[np.newaxis, :]).ravel()
    return _dedupe(np.sort(d))


#
def level_table(ls):
    '''
    Rows (index, level) for the 'index,level' CSV.
    '''
    return [(i, float(l)) for i, l in enumerate(ls.levels)]


#
def required_cutoff(phi,convention='corrected_sdt'):
    '''
    The smallest l_max covering every cell of phi after the convention shift.
    '''
    return float(np.max(_normalized(phi, convention))) + 1.0


#
def _normalized(phi,convention):
    h = phi.spec.spacing
    v = phi.values
    match convention:
        case 'raw':
            return np.abs(v) / h
        case 'corrected_sdt':
            return np.where(v < 0, h / 2 - v, v + h / 2) / h
        case _:
            raise InvalidArgumentError(f'convention must be one of {CONVENTIONS}, got {convention!r}')


#
@dataclass(frozen=True, eq=False)
class ResidualReport:
    '''
    Result of quantization_residual().

    Attributes:

    max_residual : largest per-cell residual over the checked cells.
    residual : ScalarField of per-cell residuals (0 on skipped cells).
    skipped : number of cells beyond the level set cutoff.
    '''
    max_residual: float
    residual: ScalarField
    skipped: int


#
def quantization_residual(phi,ls,convention='corrected_sdt'):
    '''
    Distance of every cell to the nearest reachable level.

    The cell value is normalized by h after the convention shift:

    raw           : |phi| / h
    corrected_sdt : (phi + h/2) / h on the background (phi >= 0),
                    (h/2 - phi) / h on the foreground.

    Parameters:

    phi : ScalarField
    ls : LevelSet whose cutoff covers the field (see required_cutoff()).
    convention : 'raw' or 'corrected_sdt'.

    Returns:

    ResidualReport
    '''
    x = _normalized(phi, convention)
    beyond = x > ls.cutoff + LEVEL_TOLERANCE
    residual = np.where(beyond, 0.0, _nearest_distance(ls.levels, x))
    skipped = int(np.count_nonzero(beyond))
    if skipped:
        log.warning('%d cells beyond level cutoff %g were skipped', skipped, ls.cutoff)
    checked = residual[~beyond]
    max_residual = float(checked.max()) if checked.size else 0.0
    return ResidualReport(max_residual, phi.like(residual), skipped)


#
def voronoi_edges(b,target='foreground'):
    '''
    Edge map of the Voronoi diagram of the target cells: a cell is 1 iff
    a face neighbour has a different nearest target cell (feature_transform
    labels, ties to the smallest linear index).

    Returns:

    BinaryField
    '''
    labels = feature_transform(b, target)
    edges = np.zeros(labels.shape, dtype=bool)
    for axis in range(labels.ndim):
        lo = [slice(None)] * labels.ndim
        hi = [slice(None)] * labels.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        differs = labels[tuple(lo)] != labels[tuple(hi)]
        edges[tuple(lo)] |= differs
        edges[tuple(hi)] |= differs
    return BinaryField(b.spec, edges)


#
def _check_same_grid(a,b):
    if not a.spec.same_as(b.spec):
        raise InvalidArgumentError(f'fields are on different grids: {a.spec} vs {b.spec}')


#
def regression_pairs(exact,quantized):
    '''
    One (exact value, quantized value) pair per cell in row-major order,
    as an array of shape (N, 2).
    '''
    _check_same_grid(exact, quantized)
    return np.column_stack((exact.values.ravel(), quantized.values.ravel()))


#
@dataclass(frozen=True, eq=False)
class Census:
    '''
    Result of flat_gradient_census().

    Attributes:

    count : number of flat cells.
    mask : BinaryField of the flat cells.
    '''
    count: int
    mask: BinaryField


#
def flat_gradient_census(quantized,exact_gradient_axis,axis):
    '''
    Counts the cells where the central difference of the quantized field
    along axis is exactly zero while the exact gradient along that axis
    has magnitude above 0.1: the flat gradients of banding.

    Parameters:

    quantized : ScalarField
    exact_gradient_axis : ScalarField, the exact derivative along axis.
    axis : axis of the difference.

    Returns:

    Census
    '''
    _check_same_grid(quantized, exact_gradient_axis)
    d0 = diff(quantized, StencilSpec('central2', axis)).values
    mask = (d0 == 0.0) & (np.abs(exact_gradient_axis.values) > 0.1)
    count = int(np.count_nonzero(mask))
    log.debug('flat gradient census along axis %d: %d cells', axis, count)
    return Census(count, BinaryField(quantized.spec, mask))
