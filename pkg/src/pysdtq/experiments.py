import logging
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError
from .grid import (BinaryField, sample_sphere_sdf, sample_sphere_gradient,
                   sample_sphere_hessian, rasterize, binarize)
from .fieldio import save_field, export_csv, export_pgm, write_rows
from .dt import signed_distance_transform
from .stencil import (StencilSpec, diff, gradient_magnitude, second_diff, mixed_diff,
                      laplacian, curvature_2d, singular_mask)
from .quant import (enumerate_levels, required_cutoff, quantization_residual, level_table,
                    regression_pairs, flat_gradient_census, voronoi_edges)
from .reinit import (Reinitializer, dither, reinitialize, curvature_band_histogram,
                     CONVERGENCE_HEADER)
from .live_data import run_streams
from .live_reinit import LiveReinit
from .config import output_path


log = logging.getLogger(__name__)

SNAPSHOTS = (0, 10, 20, 50, 100, 400)
HISTOGRAM_HEADER = ('bin_left', 'bin_right', 'count')


#
class Artifacts:
    '''
    Writes the files of one experiment run into its output directory and
    keeps the list of written paths.
    '''

    #
    def __init__(self,config):
        self.config = config
        self.paths = []
        Path(config.out_dir).mkdir(parents=True, exist_ok=True)

    #
    def path(self,name):
        p = output_path(self.config, f'{self.config.experiment}_{name}')
        self.paths.append(p)
        return p

    #
    def field(self,name,field,pgm=False):
        '''
        Saves a field as SDF1 and, in 1D and 2D, as CSV (and PGM on request).
        '''
        save_field(self.path(f'{name}.sdf'), field)
        if field.spec.ndim <= 2:
            export_csv(field, self.path(f'{name}.csv'))
            if pgm:
                export_pgm(field, self.path(f'{name}.pgm'))

    #
    def rows(self,name,header,rows):
        write_rows(self.path(f'{name}.csv'), header, rows)


#
def _sphere_only(config,what):
    if config.shape != 'sphere':
        raise InvalidArgumentError(f'{what} needs an analytic sphere, got a {config.shape}')


#
def _require_ndim(config,ndims):
    ndim = len(config.dims)
    if ndim not in ndims:
        raise InvalidArgumentError(f'{config.experiment} needs a {" or ".join(f"{n}D" for n in ndims)} grid, got {ndim}D')


#
def _smooth_region(config):
    '''
    Cells at least 2h away from the sphere center, where the distance
    function is smooth.
    '''
    spec = config.grid_spec()
    shape = config.shape_params()
    rho = sample_sphere_sdf(spec, shape).values + shape.radius
    return rho >= 2 * spec.spacing


#
def _embeddings(config):
    '''
    (reference image, quantized embedding, exact embedding or None).
    '''
    spec = config.grid_spec()
    shape = config.shape_params()
    b = rasterize(spec, shape)
    quantized = signed_distance_transform(b, config.metric_value(), corrected=True)
    exact = sample_sphere_sdf(spec, shape) if shape.kind == 'sphere' else None
    return b, quantized, exact


#
def _quant(config):
    out = Artifacts(config)
    spec = config.grid_spec()
    b, sdt, exact = _embeddings(config)
    pgm = spec.ndim == 2
    out.field('binary', b, pgm)
    out.field('sdt', sdt, pgm)
    if exact is not None:
        out.field('exact', exact, pgm)
        out.rows('regression', ('exact', 'quantized'), regression_pairs(exact, sdt))
    else:
        log.warning('no exact distance for a %s: regression pairs skipped', config.shape)

    levels = enumerate_levels(config.metric_value(), spec.ndim,
                              required_cutoff(sdt, config.convention), spec.spacing)
    out.rows('levels', ('index', 'level'), level_table(levels))
    residual = quantization_residual(sdt, levels, config.convention)
    out.field('residual', residual.residual)
    log.info('%s: %d levels, max residual %.3g (%s), %d cells skipped', config.experiment,
             levels.levels.size, residual.max_residual, config.convention, residual.skipped)
    return out, b, sdt


#
def cmd_quant1d(config):
    '''
    1D sphere: exact distance, binary image, corrected and uncorrected SDT,
    the reconstruction H(-phi), regression pairs and the level table.
    '''
    _require_ndim(config, (1,))
    out, b, sdt = _quant(config)
    out.field('sdt_uncorrected', signed_distance_transform(b, config.metric_value(), corrected=False))
    out.field('heaviside', binarize(sdt))
    return out.paths


#
def cmd_quant2d(config):
    '''
    2D shape: exact distance, binary image, corrected SDT, regression pairs
    and the level table.
    '''
    _require_ndim(config, (2,))
    out, b, sdt = _quant(config)
    return out.paths


#
def _error(field,analytic,smooth):
    '''
    field - analytic, and its max magnitude over the smooth region.
    '''
    e = field.values - analytic
    return field.like(e), float(np.max(np.abs(e[smooth]))) if smooth.any() else 0.0


#
def cmd_gradients(config):
    '''
    Central x differences and gradient magnitudes of the exact and
    quantized embeddings, their errors against the analytic gradient, and
    the flat gradient census in a summary CSV.
    '''
    _require_ndim(config, (2,))
    _sphere_only(config, 'gradients')
    out = Artifacts(config)
    spec = config.grid_spec()
    shape = config.shape_params()
    b, quantized, exact = _embeddings(config)
    grad = sample_sphere_gradient(spec, shape)
    smooth = _smooth_region(config)

    summary = []
    for name, phi in (('exact', exact), ('quantized', quantized)):
        d0x = diff(phi, StencilSpec('central2', 0))
        magnitude = gradient_magnitude(phi, 'central2')
        out.field(f'{name}_d0x', d0x, pgm=True)
        out.field(f'{name}_gradmag', magnitude, pgm=True)
        d0x_error, d0x_max = _error(d0x, grad[0].values, smooth)
        magnitude_error, magnitude_max = _error(magnitude, 1.0, smooth)
        out.field(f'{name}_d0x_error', d0x_error)
        out.field(f'{name}_gradmag_error', magnitude_error)
        summary += [
            (f'{name}_d0x_max_error', d0x_max),
            (f'{name}_gradmag_max_error', magnitude_max),
            (f'{name}_gradmag_mean', float(np.mean(magnitude.values[smooth]))),
        ]

    for axis in range(spec.ndim):
        census = flat_gradient_census(quantized, grad[axis], axis)
        out.field(f'flat_axis{axis}', census.mask, pgm=True)
        summary.append((f'flat_gradient_count_axis{axis}', census.count))
        log.info('flat gradients along axis %d: %d cells', axis, census.count)
    out.rows('summary', ('quantity', 'value'), summary)
    return out.paths


#
def cmd_higher(config):
    '''
    Second derivatives, Laplacian and curvature of the exact and quantized
    embeddings, with their errors against the analytic values.
    '''
    _require_ndim(config, (2,))
    _sphere_only(config, 'higher')
    out = Artifacts(config)
    spec = config.grid_spec()
    shape = config.shape_params()
    b, quantized, exact = _embeddings(config)
    hessian = sample_sphere_hessian(spec, shape)
    rho = sample_sphere_sdf(spec, shape).values + shape.radius
    inverse_rho = np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), 0.0)
    smooth = _smooth_region(config)
    order = config.curvature_order

    summary = []
    for name, phi in (('exact', exact), ('quantized', quantized)):
        kappa = curvature_2d(phi, order)
        singular = singular_mask(kappa)
        quantities = {
            'dxx': (second_diff(phi, 0, order), hessian[(0, 0)].values),
            'dxy': (mixed_diff(phi, 0, 1, order), hessian[(0, 1)].values),
            'laplacian': (laplacian(phi, order), inverse_rho),
            'curvature': (kappa, np.where(singular, kappa.values, inverse_rho)),
        }
        for quantity, (field, analytic) in quantities.items():
            out.field(f'{name}_{quantity}', field, pgm=quantity != 'curvature')
            error, worst = _error(field, analytic, smooth & ~singular)
            out.field(f'{name}_{quantity}_error', error)
            summary.append((f'{name}_{quantity}_max_error', worst))
        summary.append((f'{name}_singular_cells', int(np.count_nonzero(singular))))
    out.rows('summary', ('quantity', 'value'), summary)
    return out.paths


#
def cmd_voronoi(config):
    '''
    Voronoi edge maps of the feature transforms outside (nearest foreground
    cell) and inside (nearest background cell), with the SDT, its central
    x difference and gradient magnitude for overlays.
    '''
    _require_ndim(config, (2,))
    out = Artifacts(config)
    b, sdt, exact = _embeddings(config)
    outside = voronoi_edges(b, 'foreground').values & b.background
    inside = voronoi_edges(b, 'background').values & b.foreground
    out.field('edges_outside', BinaryField(b.spec, outside), pgm=True)
    out.field('edges_inside', BinaryField(b.spec, inside), pgm=True)
    out.field('edges', BinaryField(b.spec, outside | inside), pgm=True)
    out.field('sdt', sdt, pgm=True)
    out.field('d0x', diff(sdt, StencilSpec('central2', 0)), pgm=True)
    out.field('gradmag', gradient_magnitude(sdt, 'central2'), pgm=True)
    log.info('voronoi: %d outside and %d inside edge cells',
             int(np.count_nonzero(outside)), int(np.count_nonzero(inside)))
    return out.paths


#
def _reinit_input(config,alpha):
    '''
    (reference, quantized embedding, initial embedding, exact gradient or None) of a
    reinitialization run with dither amplitude divisor alpha.
    '''
    b, quantized, exact = _embeddings(config)
    params = config.dither_params(alpha)
    phi0 = quantized if params is None else dither(quantized, config.h, params)
    exact_gradient = (sample_sphere_gradient(config.grid_spec(), config.shape_params())
                      if exact is not None else None)
    return b, quantized, phi0, exact_gradient


#
def _snapshots(config):
    return [k for k in SNAPSHOTS if k <= config.iterations]


#
def _stream(config,out,alpha,tag):
    '''
    A LiveReinit run writing its snapshot fields as they are produced.
    '''
    b, quantized, phi0, exact_gradient = _reinit_input(config, alpha)
    snapshots = set(_snapshots(config))
    r = Reinitializer(phi0, b, exact_gradient, config.reinit_params())

    def consume(packet):
        if packet.iteration in snapshots:
            out.field(f'{tag}phi_{packet.iteration:04d}', packet.phi, pgm=True)

    name = config.experiment if alpha is None else f'{config.experiment} alpha={alpha:g}'
    return LiveReinit(r, consume, id=name, rate=config.rate)


#
def _convergence_rows(reports):
    return [r.row() for r in reports]


#
def cmd_reinit(config):
    '''
    Dithers the quantized embedding and reinitializes it, writing the
    convergence log and snapshots at iterations 0, 10, 20, 50, 100 and 400.
    '''
    out = Artifacts(config)
    if config.iterations == 0:
        b, quantized, phi0, exact_gradient = _reinit_input(config, config.alpha)
        out.field('phi_0000', phi0, pgm=True)
        out.rows('convergence', CONVERGENCE_HEADER, [])
        return out.paths

    stream = _stream(config, out, config.alpha, '')
    try:
        stream.start()
    finally:
        # partial logs are kept on failure
        out.rows('convergence', CONVERGENCE_HEADER, _convergence_rows(stream.reports))
    out.field('phi_final', stream.reinitializer.phi, pgm=True)
    last = stream.reports[-1]
    log.info('reinit: %d iterations, e_R=%g e_MG=%.4g e_D=%s', last.iteration, last.e_R, last.e_MG,
             'n/a' if last.e_D is None else f'{last.e_D:.4g}')
    return out.paths


#
def _alpha_label(alpha):
    return 'none' if alpha is None else f'{alpha:g}'


#
def cmd_sweep_alpha(config):
    '''
    One reinitialization run per entry of config.alphas, run concurrently.
    Writes each run's convergence log and a combined
    'alpha,iter,e_R,e_MG,e_D' CSV.
    '''
    if config.iterations == 0:
        raise InvalidArgumentError('an alpha sweep needs iterations >= 1')
    out = Artifacts(config)
    streams = {a: _stream(config, out, a, f'alpha_{_alpha_label(a)}_') for a in config.alphas}
    failure = None
    try:
        run_streams(streams.values())
    except NumericalFailureError as e:
        failure = e
    combined = []
    for alpha, stream in streams.items():
        label = _alpha_label(alpha)
        rows = _convergence_rows(stream.reports)
        out.rows(f'alpha_{label}', CONVERGENCE_HEADER, rows)
        combined += [(label,) + row for row in rows]
        if stream.reports:
            first, last = stream.reports[0], stream.reports[-1]
            log.info('alpha=%s: e_MG %.4g -> %.4g', label, first.e_MG, last.e_MG)
    out.rows('combined', ('alpha',) + CONVERGENCE_HEADER, combined)
    if failure is not None:
        raise failure
    return out.paths


#
def _histogram_range(config,fields):
    if config.hist_range is not None:
        return config.hist_range
    samples = [curvature_band_histogram(phi, config.band_halfwidth, 1, None, config.curvature_order).samples
               for phi in fields]
    return (min(float(s.min()) for s in samples), max(float(s.max()) for s in samples))


#
def cmd_curvature_hist(config):
    '''
    Band histograms of the mean curvature of a 3D sphere for the exact
    distance (control), the quantized SDT and the dithered and
    reinitialized SDT, on one common range, with their statistics.
    '''
    _require_ndim(config, (3,))
    _sphere_only(config, 'curvature-hist')
    out = Artifacts(config)
    b, quantized, phi0, exact_gradient = _reinit_input(config, config.alpha)
    exact = sample_sphere_sdf(config.grid_spec(), config.shape_params())
    if config.iterations > 0:
        corrected, reports = reinitialize(phi0, b, exact_gradient, config.reinit_params())
        out.rows('convergence', CONVERGENCE_HEADER, _convergence_rows(reports))
    else:
        corrected = phi0
    embeddings = {'exact': exact, 'quantized': quantized, 'corrected': corrected}
    value_range = _histogram_range(config, embeddings.values())

    stats = []
    for name, phi in embeddings.items():
        hist = curvature_band_histogram(phi, config.band_halfwidth, config.hist_bins,
                                        value_range, config.curvature_order)
        out.rows(f'hist_{name}', HISTOGRAM_HEADER, hist.rows())
        stats.append((name, hist.count, hist.mean, hist.std, hist.median, hist.excluded))
        log.info('%s mean curvature: median %.4g std %.4g over %d cells',
                 name, hist.median, hist.std, hist.count)
    out.rows('stats', ('embedding', 'count', 'mean', 'std', 'median', 'excluded'), stats)
    out.field('quantized', quantized)
    out.field('corrected', corrected)
    return out.paths


#
def cmd_dither(config):
    '''
    The dithering panel set: exact distance, binary image, quantized SDT,
    dithered SDT, the noise that was added and the reconstruction H(-phi_hat).
    '''
    if config.alpha is None:
        raise InvalidArgumentError('dither needs an alpha')
    out = Artifacts(config)
    b, quantized, exact = _embeddings(config)
    dithered = dither(quantized, config.h, config.dither_params())
    pgm = b.spec.ndim == 2
    if exact is not None:
        out.field('exact', exact, pgm)
    out.field('binary', b, pgm)
    out.field('sdt', quantized, pgm)
    out.field('dithered', dithered, pgm)
    out.field('noise', quantized.like(dithered.values - quantized.values), pgm)
    out.field('heaviside', binarize(dithered), pgm)
    return out.paths


COMMANDS = {
    'quant1d': cmd_quant1d,
    'quant2d': cmd_quant2d,
    'gradients': cmd_gradients,
    'higher': cmd_higher,
    'voronoi': cmd_voronoi,
    'reinit': cmd_reinit,
    'sweep-alpha': cmd_sweep_alpha,
    'curvature-hist': cmd_curvature_hist,
    'dither': cmd_dither,
}


#
def run_experiment(config):
    '''
    Runs the experiment named in config.

    Returns:

    list of the written paths.
    '''
    log.debug('running %s into %s', config.experiment, config.out_dir)
    paths = COMMANDS[config.experiment](config)
    log.info('%s: wrote %d files to %s', config.experiment, len(paths), config.out_dir)
    return paths
