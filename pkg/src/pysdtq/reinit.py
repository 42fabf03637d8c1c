import logging
from dataclasses import dataclass, field

import numpy as np
from quantiphy import Quantity

from .errors import (InvalidArgumentError, InvalidInputError, EmptyBandError,
                     NumericalFailureError)
from .grid import ScalarField, BinaryField, binarize
from .stencil import (gradient, weno5, godunov_gradmag, curvature_2d,
                      mean_curvature_3d, singular_mask)


log = logging.getLogger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF

# SplitMix64 constants.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

CONVERGENCE_HEADER = ('iter', 'e_R', 'e_MG', 'e_D')
NORMALIZATIONS = ('rms', 'size')


#
@dataclass(frozen=True)
class DitherParams:
    '''
    Attributes:

    alpha : amplitude divisor, > 1. The noise amplitude is min(h/alpha, |phi|).
    seed : 64-bit seed of the per-cell draw.
    '''
    alpha: float
    seed: int = 0

    def __post_init__(self):
        alpha = float(self.alpha)
        if not alpha > 1:
            raise InvalidArgumentError(f'dither alpha must be > 1, got {self.alpha}')
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'seed', int(self.seed) & MASK64)


#
@dataclass(frozen=True)
class ReinitParams:
    '''
    Attributes:

    iterations : number of TVD-RK3 steps, >= 1.
    cfl : dt / h, in (0, 1).
    sign_epsilon : cells that flip sign are clamped to sign(phi0) * sign_epsilon * h.
    log_every : an ErrorReport is taken every log_every steps, and after the last.
    '''
    iterations: int
    cfl: float = 0.3
    sign_epsilon: float = 1e-9
    log_every: int = 1

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise InvalidArgumentError(f'iterations must be >= 1, got {self.iterations}')
        if not 0 < float(self.cfl) < 1:
            raise InvalidArgumentError(f'cfl must be in (0, 1), got {self.cfl}')
        if not float(self.sign_epsilon) > 0:
            raise InvalidArgumentError(f'sign_epsilon must be > 0, got {self.sign_epsilon}')
        if int(self.log_every) < 1:
            raise InvalidArgumentError(f'log_every must be >= 1, got {self.log_every}')
        object.__setattr__(self, 'iterations', int(self.iterations))
        object.__setattr__(self, 'cfl', float(self.cfl))
        object.__setattr__(self, 'sign_epsilon', float(self.sign_epsilon))
        object.__setattr__(self, 'log_every', int(self.log_every))


#
@dataclass(frozen=True)
class ErrorReport:
    '''
    Attributes:

    iteration : pseudo-time step the report was taken after.
    e_R : representation error, max over cells of |H(-phi) - I|, 0 or 1.
    e_MG : magnitude gradient error.
    e_D : gradient error, None without an exact gradient.
    '''
    iteration: int
    e_R: float
    e_MG: float
    e_D: float = None

    #
    def row(self):
        return (self.iteration, self.e_R, self.e_MG, self.e_D)


#
def uniform_draw(seed,n):
    '''
    n deterministic draws in the open interval (-1, 1), one per linear index.

    Draw k is the SplitMix64 finalizer of (seed XOR k). Its top 53 bits m
    map to (2m + 1 - 2**53) / 2**53, which never reaches -1 or 1. No state
    is carried between cells.
    '''
    z = np.uint64(int(seed) & MASK64) ^ np.arange(n, dtype=np.uint64)
    with np.errstate(over='ignore'):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    m = (z >> np.uint64(11)).astype(np.int64)
    k = 2 * m + 1 - (1 << 53)
    return k.astype(np.float64) / float(1 << 53)


#
def dither(phi_q,h,params):
    '''
    Adds amplitude clipped noise to a quantized embedding:

    phi_hat = phi_q + A * u,  A = min(h/alpha, |phi_q|),  u in (-1, 1)

    The sign of every cell is preserved, so the binary image does not
    change. A cell where rounding would still reach zero or flip the sign
    keeps its undithered value.

    Parameters:

    phi_q : ScalarField with no zero cells.
    h : sampling period.
    params : DitherParams

    Returns:

    ScalarField
    '''
    v = phi_q.values
    zeros = int(np.count_nonzero(v == 0))
    if zeros:
        raise InvalidInputError(f'cannot dither a field holding {zeros} zero cells; their sign is undefined')
    amplitude = np.minimum(h / params.alpha, np.abs(v))
    u = uniform_draw(params.seed, v.size).reshape(v.shape)
    noisy = v + amplitude * u
    kept = np.sign(noisy) != np.sign(v)
    if kept.any():
        log.debug('%d cells kept undithered', int(np.count_nonzero(kept)))
    log.debug('dither alpha=%s seed=%d over %s cells', Quantity(params.alpha), params.seed, v.size)
    return phi_q.like(np.where(kept, v, noisy))


#
def smoothed_sign(phi0,h):
    '''
    S = phi0 / sqrt(phi0^2 + h^2).
    '''
    v = phi0.values
    return phi0.like(v / np.sqrt(v * v + h * h))


#
def _check_spacing(phi,h):
    if h is not None and float(h) != phi.spec.spacing:
        raise InvalidArgumentError(f'h={h} does not match the field spacing {phi.spec.spacing}')


#
def reinit_rhs(phi,sign_field,h=None):
    '''
    Right hand side of the reinitialization equation,
    rhs = -S * (|grad phi|_G - 1), where |grad phi|_G is the Godunov
    combination of the WENO5 one-sided differences upwinded by S.
    The evolution is phi <- phi + dt * rhs.
    '''
    if not phi.spec.same_as(sign_field.spec):
        raise InvalidArgumentError(f'phi and sign field are on different grids: {phi.spec} vs {sign_field.spec}')
    _check_spacing(phi, h)
    axes = range(phi.spec.ndim)
    minus = [weno5(phi, a, 'minus') for a in axes]
    plus = [weno5(phi, a, 'plus') for a in axes]
    g = godunov_gradmag(minus, plus, sign_field).values
    return phi.like(-sign_field.values * (g - 1.0))


#
def _selection(spec,mask):
    if mask is None:
        return np.ones(spec.dims, dtype=bool)
    if isinstance(mask, BinaryField):
        if not mask.spec.same_as(spec):
            raise InvalidArgumentError('mask is on a different grid')
        return mask.values
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != spec.dims:
        raise InvalidArgumentError(f'mask shape {mask.shape} does not match grid {spec.dims}')
    return mask


#
def _normalized_norm(x,count,normalization):
    norm = float(np.sqrt(np.sum(x * x)))
    match normalization:
        case 'rms':
            return norm / np.sqrt(count)
        case 'size':
            return norm / count
        case _:
            raise InvalidArgumentError(f'normalization must be one of {NORMALIZATIONS}, got {normalization!r}')


#
def error_metrics(phi,reference,exact_gradient=None,mask=None,normalization='rms',iteration=0):
    '''
    The three error measures of an embedding.

    e_R  = max over cells |H(-phi) - I|
    e_MG = ||(|D phi| - 1)|| / normalizer
    e_D  = ||(|D phi - grad|)|| / normalizer

    D is the central4 gradient, ||.|| the l2 norm over the cells of mask
    (all cells by default) and the normalizer sqrt(N) for 'rms' or N for
    'size', N being the number of cells in the mask.

    'size' is the literal l2 / N form of the error measures. It shrinks as
    the grid is refined even when the per-cell error does not, so it cannot
    show that the quantized gradient error persists under refinement. 'rms'
    keeps the per-cell scale and is the default for that reason.

    Parameters:

    phi : ScalarField
    reference : BinaryField I.
    exact_gradient : optional list of per-axis ScalarFields.
    mask : optional BinaryField or boolean array.
    normalization : 'rms' or 'size'.
    iteration : recorded in the report.

    Returns:

    ErrorReport
    '''
    spec = phi.spec
    if not spec.same_as(reference.spec):
        raise InvalidArgumentError(f'phi and reference are on different grids: {spec} vs {reference.spec}')
    selected = _selection(spec, mask)
    count = int(np.count_nonzero(selected))
    if count == 0:
        raise InvalidArgumentError('error mask selects no cells')

    e_r = 1.0 if np.any(binarize(phi).values != reference.values) else 0.0
    d = [g.values for g in gradient(phi, 'central4')]
    magnitude = np.sqrt(sum(g * g for g in d))
    e_mg = _normalized_norm((magnitude - 1.0)[selected], count, normalization)

    e_d = None
    if exact_gradient is not None:
        if len(exact_gradient) != spec.ndim:
            raise InvalidArgumentError(f'exact gradient has {len(exact_gradient)} components, grid has {spec.ndim} axes')
        if any(not e.spec.same_as(spec) for e in exact_gradient):
            raise InvalidArgumentError('exact gradient is on a different grid')
        distance = np.sqrt(sum((g - e.values) ** 2 for g, e in zip(d, exact_gradient)))
        e_d = _normalized_norm(distance[selected], count, normalization)
    return ErrorReport(int(iteration), e_r, e_mg, e_d)


#
class Reinitializer:
    '''
    Pseudo-time evolution of phi_t = S (1 - |grad phi|) with WENO5 upwind
    differences and TVD-RK3 steps of dt = cfl * h. S is the smoothed sign of
    phi0, frozen for the whole run. After every step cells whose sign
    differs from phi0 are clamped back, so H(-phi) never changes.

    Parameters:

    phi0 : ScalarField, the initial embedding.
    reference : BinaryField the embedding must keep representing.
    exact_gradient : optional per-axis ScalarFields for e_D.
    params : ReinitParams
    mask, normalization : passed on to error_metrics().
    '''

    def __init__(self,phi0,reference,exact_gradient=None,params=None,mask=None,normalization='rms'):
        if not phi0.spec.same_as(reference.spec):
            raise InvalidArgumentError(f'phi0 and reference are on different grids: {phi0.spec} vs {reference.spec}')
        mismatched = int(np.count_nonzero(binarize(phi0).values != reference.values))
        if mismatched:
            raise InvalidInputError(f'initial embedding does not represent the reference image ({mismatched} cells differ)')
        self.params = params if params is not None else ReinitParams(iterations=1)
        self.reference = reference
        self.exact_gradient = exact_gradient
        self.mask = mask
        self.normalization = normalization
        self.h = phi0.spec.spacing
        self.dt = self.params.cfl * self.h
        self.phi0 = phi0
        self.sign0 = np.sign(phi0.values)
        self.sign = smoothed_sign(phi0, self.h)
        self.phi = phi0
        self.iteration = 0
        self.reports = []

    #
    def _finite(self,values,stage):
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise NumericalFailureError(
                f'{bad} non-finite cells in RK stage {stage} of iteration {self.iteration + 1}',
                self.iteration + 1, self.reports)
        return ScalarField(self.phi.spec, values)

    #
    def _rhs(self,phi):
        return reinit_rhs(phi, self.sign).values

    #
    def step(self):
        '''
        Advances one TVD-RK3 step and applies the sign clamp.

        Returns:

        ScalarField, the new phi.
        '''
        dt = self.dt
        v = self.phi.values
        phi1 = self._finite(v + dt * self._rhs(self.phi), 1)
        phi2 = self._finite(0.75 * v + 0.25 * (phi1.values + dt * self._rhs(phi1)), 2)
        v3 = v / 3.0 + 2.0 / 3.0 * (phi2.values + dt * self._rhs(phi2))
        self._finite(v3, 3)

        flipped = np.sign(v3) != self.sign0
        if flipped.any():
            v3 = np.where(flipped, self.sign0 * self.params.sign_epsilon * self.h, v3)
            log.debug('iteration %d: clamped %d cells', self.iteration + 1, int(np.count_nonzero(flipped)))
        self.phi = ScalarField(self.phi.spec, v3)
        self.iteration += 1
        return self.phi

    #
    def report(self):
        '''
        The ErrorReport of the current field.
        '''
        return error_metrics(self.phi, self.reference, self.exact_gradient,
                             self.mask, self.normalization, self.iteration)

    #
    def record(self):
        '''
        Takes a report and keeps it in self.reports.
        '''
        r = self.report()
        self.reports.append(r)
        log.debug('iter %d e_R=%g e_MG=%.6g e_D=%s', r.iteration, r.e_R, r.e_MG,
                  'n/a' if r.e_D is None else f'{r.e_D:.6g}')
        return r

    #
    def due(self):
        '''
        True when the current iteration is one that gets logged.
        '''
        k = self.iteration
        return k == 0 or k % self.params.log_every == 0 or k == self.params.iterations


#
def reinitialize(phi0,reference,exact_gradient=None,params=None,mask=None,normalization='rms'):
    '''
    Runs params.iterations reinitialization steps from phi0.

    Parameters:

    phi0 : ScalarField with binarize(phi0) equal to reference.
    reference : BinaryField
    exact_gradient : optional per-axis ScalarFields; e_D is None without it.
    params : ReinitParams

    Returns:

    (final ScalarField, list of ErrorReport) with a report at iteration 0,
    every params.log_every iterations and at the last iteration.
    '''
    r = Reinitializer(phi0, reference, exact_gradient, params, mask, normalization)
    r.record()
    for _ in range(r.params.iterations):
        r.step()
        if r.due():
            r.record()
    first, last = r.reports[0], r.reports[-1]
    log.info('reinitialized %d iterations: e_MG %.4g -> %.4g', r.iteration, first.e_MG, last.e_MG)
    return r.phi, r.reports


#
@dataclass(frozen=True, eq=False)
class CurvatureHistogram:
    '''
    Result of curvature_band_histogram().

    Attributes:

    edges : bins + 1 bin edges.
    counts : samples per bin.
    samples : the band curvature values, singular cells excluded.
    excluded : number of singular band cells left out.
    '''
    edges: np.ndarray
    counts: np.ndarray
    samples: np.ndarray = field(repr=False)
    excluded: int = 0

    @property
    def count(self):
        return int(self.samples.size)

    @property
    def mean(self):
        return float(np.mean(self.samples))

    @property
    def std(self):
        return float(np.std(self.samples))

    @property
    def median(self):
        return float(np.median(self.samples))

    #
    def rows(self):
        '''
        Rows (bin_left, bin_right, count).
        '''
        return [(float(self.edges[i]), float(self.edges[i + 1]), int(self.counts[i]))
                for i in range(self.counts.size)]


#
def curvature_band_histogram(phi,band_halfwidth,bins=50,value_range=None,order=2):
    '''
    Histogram of the curvature (2D) or mean curvature (3D) of phi over the
    band of cells with |phi| < band_halfwidth. Cells at the gradient
    singularity are excluded.

    Parameters:

    phi : 2D or 3D ScalarField.
    band_halfwidth : physical half width of the band.
    bins : number of fixed width bins.
    value_range : (low, high) of the bins; the sample range when None.
    order : 2 or 4, accuracy of the curvature stencils.

    Returns:

    CurvatureHistogram
    '''
    match phi.spec.ndim:
        case 2:
            kappa = curvature_2d(phi, order)
        case 3:
            kappa = mean_curvature_3d(phi, order)
        case _:
            raise InvalidArgumentError(f'curvature histograms need a 2D or 3D field, got {phi.spec.ndim}D')
    band = np.abs(phi.values) < band_halfwidth
    singular = singular_mask(kappa)
    excluded = int(np.count_nonzero(band & singular))
    samples = kappa.values[band & ~singular]
    if samples.size == 0:
        raise EmptyBandError(f'no usable cells in the band |phi| < {band_halfwidth} '
                             f'({excluded} singular cells excluded)')
    if value_range is None:
        value_range = (float(samples.min()), float(samples.max()))
    counts, edges = np.histogram(samples, bins=bins, range=value_range)
    log.debug('curvature band |phi| < %g: %d cells, %d singular', band_halfwidth, samples.size, excluded)
    return CurvatureHistogram(edges, counts, samples, excluded)
