import logging
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from quantiphy import Quantity, QuantiPhyError

from .errors import InvalidArgumentError
from .grid import GridSpec, ShapeParams
from .dt import Metric
from .quant import CONVENTIONS
from .reinit import DitherParams, ReinitParams


log = logging.getLogger(__name__)

EXPERIMENTS = ('quant1d', 'quant2d', 'gradients', 'higher', 'voronoi',
               'reinit', 'sweep-alpha', 'curvature-hist', 'dither')

# How each field is written and parsed in the text form.
_KINDS = {
    'experiment': 'str',
    'shape': 'str',
    'center': 'floats',
    'radius': 'float',
    'vertices': 'vertices',
    'dims': 'ints',
    'h': 'float',
    'origin': 'floats?',
    'metric': 'str',
    'alpha': 'float?',
    'alphas': 'alphas',
    'seed': 'int',
    'iterations': 'int',
    'cfl': 'float',
    'sign_epsilon': 'float',
    'log_every': 'int',
    'band': 'float?',
    'hist_bins': 'int',
    'hist_range': 'floats?',
    'curvature_order': 'int',
    'convention': 'str',
    'rate': 'bool',
    'out_dir': 'str',
}

# Default of dither_params(): the configured alpha.
_CONFIGURED = object()


#
@dataclass(frozen=True)
class ExperimentConfig:
    '''
    Everything an experiment run depends on. Runs are deterministic given
    their config.

    Attributes:

    experiment : one of EXPERIMENTS.
    shape : 'sphere' or 'polygon'.
    center, radius : sphere parameters, physical units.
    vertices : polygon corners ((x0, y0), (x1, y1), ...).
    dims, h, origin : the sample lattice.
    metric : metric text, see Metric.parse().
    alpha : dither amplitude divisor, None for no dither.
    alphas : the alpha sweep, None entries run without dither.
    seed : dither seed.
    iterations, cfl, sign_epsilon, log_every : reinitialization parameters.
    band : curvature band half width, h when None.
    hist_bins, hist_range : curvature histogram bins, range from the data when None.
    curvature_order : 2 or 4.
    convention : level convention of the residual check, 'raw' or 'corrected_sdt'.
    out_dir : directory all artifacts are written to.
    rate : if True, reinitialization runs log their steps per second.
    '''
    experiment: str
    shape: str = 'sphere'
    center: tuple = (5.0,)
    radius: float = 2.25
    vertices: tuple = ()
    dims: tuple = (11,)
    h: float = 1.0
    origin: tuple = None
    metric: str = 'euclidean'
    alpha: float = None
    alphas: tuple = (None, 2.0, 20.0)
    seed: int = 42
    iterations: int = 400
    cfl: float = 0.3
    sign_epsilon: float = 1e-9
    log_every: int = 1
    band: float = None
    hist_bins: int = 50
    hist_range: tuple = None
    curvature_order: int = 2
    convention: str = 'corrected_sdt'
    out_dir: str = 'out'
    rate: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidArgumentError(f'unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}')
        if self.convention not in CONVENTIONS:
            raise InvalidArgumentError(f'convention must be one of {CONVENTIONS}, got {self.convention!r}')
        if self.curvature_order not in (2, 4):
            raise InvalidArgumentError(f'curvature_order must be 2 or 4, got {self.curvature_order}')
        if self.iterations < 0:
            raise InvalidArgumentError(f'iterations must be >= 0, got {self.iterations}')
        if not self.alphas:
            raise InvalidArgumentError('alphas must name at least one run')
        if self.hist_bins < 1:
            raise InvalidArgumentError(f'hist_bins must be >= 1, got {self.hist_bins}')
        if self.band is not None and not self.band >= 0:
            raise InvalidArgumentError(f'band must be >= 0, got {self.band}')
        if self.hist_range is not None and (len(self.hist_range) != 2 or not self.hist_range[0] < self.hist_range[1]):
            raise InvalidArgumentError(f'hist_range must be (low, high) with low < high, got {self.hist_range}')
        # Builds every derived object once so a bad config fails before any file is written.
        self.grid_spec()
        self.shape_params()
        self.metric_value()
        if self.alpha is not None:
            DitherParams(self.alpha, self.seed)
        for a in self.alphas:
            if a is not None:
                DitherParams(a, self.seed)
        if self.iterations > 0:
            self.reinit_params()

    #
    def grid_spec(self):
        return GridSpec(self.dims, self.h, self.origin)

    #
    def shape_params(self):
        shape = (ShapeParams.sphere(self.center, self.radius) if self.shape == 'sphere'
                 else ShapeParams(self.shape, vertices=self.vertices))
        if shape.kind == 'sphere' and len(shape.center) != len(self.dims):
            raise InvalidArgumentError(
                f'center {shape.center} has {len(shape.center)} coordinates, dims {self.dims} has {len(self.dims)} axes')
        return shape

    #
    def metric_value(self):
        return Metric.parse(self.metric)

    #
    def dither_params(self,alpha=_CONFIGURED):
        '''
        DitherParams for alpha (the configured alpha by default), None for no dither.
        '''
        alpha = self.alpha if alpha is _CONFIGURED else alpha
        return None if alpha is None else DitherParams(alpha, self.seed)

    #
    def reinit_params(self):
        return ReinitParams(self.iterations, self.cfl, self.sign_epsilon, self.log_every)

    @property
    def band_halfwidth(self):
        return self.h if self.band is None else self.band


_DEFAULTS = {
    'quant1d': dict(center=(5.0,), radius=2.25, dims=(11,), h=1.0),
    'quant2d': dict(center=(5.0, 5.0), radius=2.25, dims=(11, 11), h=1.0),
    'gradients': dict(center=(5.0, 5.0), radius=2.5, dims=(21, 21), h=0.5),
    'higher': dict(center=(5.0, 5.0), radius=2.5, dims=(21, 21), h=0.5),
    'voronoi': dict(center=(5.0, 5.0), radius=2.5, dims=(21, 21), h=0.5),
    'reinit': dict(center=(5.0, 5.0), radius=2.5, dims=(64, 64), h=0.5, alpha=2.0, iterations=400),
    'sweep-alpha': dict(center=(5.0, 5.0), radius=2.5, dims=(64, 64), h=0.5, iterations=400),
    'dither': dict(center=(5.0, 5.0), radius=2.5, dims=(21, 21), h=0.5, alpha=2.0),
    'curvature-hist': dict(center=(11.5, 11.5, 11.5), radius=8.0, dims=(24, 24, 24), h=1.0,
                           alpha=20.0, iterations=100, curvature_order=4),
}


#
def default_config(experiment):
    '''
    The default configuration of an experiment. Shapes and lattices follow
    the classic figure set: a 1D sphere at 5 of radius 2.25, circles at
    (5,5) of radius 2.25 or 2.5 and a radius 8 sphere for the curvature
    histograms.
    '''
    if experiment not in EXPERIMENTS:
        raise InvalidArgumentError(f'unknown experiment {experiment!r}, expected one of {EXPERIMENTS}')
    return ExperimentConfig(experiment, **_DEFAULTS[experiment])


#
def _number(text):
    '''
    A real from text, SI scale factors allowed: '500m' is 0.5.
    '''
    text = text.strip()
    try:
        x = float(text)
    except ValueError:
        try:
            x = Quantity(text).real
        except (QuantiPhyError, ValueError):
            raise InvalidArgumentError(f'not a number: {text!r}') from None
    if not np.isfinite(x):
        raise InvalidArgumentError(f'not a finite number: {text!r}')
    return x


#
def _integer(text):
    text = text.strip()
    try:
        return int(text, 0)
    except ValueError:
        x = _number(text)
        if x != int(x):
            raise InvalidArgumentError(f'not an integer: {text!r}') from None
        return int(x)


#
def _optional(text,parse):
    return None if text.strip().lower() in ('none', '') else parse(text)


#
def _flag(text):
    match text.strip().lower():
        case 'true' | 'yes' | 'on' | '1':
            return True
        case 'false' | 'no' | 'off' | '0':
            return False
        case _:
            raise InvalidArgumentError(f'not a boolean: {text!r}')


#
def parse_value(key,text):
    '''
    Parses the text form of one config field.
    '''
    if key not in _KINDS:
        raise InvalidArgumentError(f'unknown config key {key!r}')
    match _KINDS[key]:
        case 'str':
            return text.strip()
        case 'float':
            return _number(text)
        case 'float?':
            return _optional(text, _number)
        case 'int':
            return _integer(text)
        case 'bool':
            return _flag(text)
        case 'floats':
            return tuple(_number(t) for t in text.split(','))
        case 'floats?':
            return _optional(text, lambda t: tuple(_number(x) for x in t.split(',')))
        case 'ints':
            return tuple(_integer(t) for t in text.split(','))
        case 'alphas':
            return tuple(_optional(t, _number) for t in text.split(','))
        case 'vertices':
            if not text.strip():
                return ()
            return tuple(tuple(_number(x) for x in v.split(',')) for v in text.split(';'))


#
def format_value(key,value):
    '''
    The text form of one config field. Reals are written with repr, so
    parse_value(format_value(v)) == v.
    '''
    if value is None:
        return 'none'
    match _KINDS[key]:
        case 'str':
            return value
        case 'float' | 'float?':
            return repr(float(value))
        case 'int':
            return str(int(value))
        case 'bool':
            return 'true' if value else 'false'
        case 'floats' | 'floats?':
            return ','.join(repr(float(x)) for x in value)
        case 'ints':
            return ','.join(str(int(x)) for x in value)
        case 'alphas':
            return ','.join('none' if a is None else repr(float(a)) for a in value)
        case 'vertices':
            return ';'.join(','.join(repr(float(x)) for x in v) for v in value)


#
def to_text(config):
    '''
    'key = value' lines, one per field.
    '''
    return ''.join(f'{f.name} = {format_value(f.name, getattr(config, f.name))}\n'
                   for f in dataclasses.fields(config))


#
def parse_overrides(text):
    '''
    Parses 'key = value' lines into a dict of typed values. Blank lines
    and lines starting with '#' are skipped.
    '''
    overrides = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise InvalidArgumentError(f'line {n}: expected key = value, got {line!r}')
        key = key.strip()
        overrides[key] = parse_value(key, value)
    return overrides


#
def from_text(text):
    '''
    The config of to_text(). Keys that are missing take the defaults of
    the experiment.
    '''
    overrides = parse_overrides(text)
    if 'experiment' not in overrides:
        raise InvalidArgumentError('config text has no experiment key')
    return merge(default_config(overrides['experiment']), overrides)


#
def load_config(path):
    '''
    Reads the overrides of a config file.

    Returns:

    dict of field name to value, to be applied with merge().
    '''
    overrides = parse_overrides(Path(path).read_text())
    log.debug('config %s sets %s', path, ', '.join(overrides))
    return overrides


#
def merge(config,overrides):
    '''
    A copy of config with the fields in overrides replaced. Apply file
    overrides first and command line overrides last.
    '''
    unknown = set(overrides) - set(_KINDS)
    if unknown:
        raise InvalidArgumentError(f'unknown config keys {sorted(unknown)}')
    return dataclasses.replace(config, **overrides)


#
def output_path(config,name):
    '''
    Path of an artifact inside config.out_dir. Names that would leave
    out_dir are rejected.
    '''
    root = Path(config.out_dir).resolve()
    path = (root / name).resolve()
    if not path.is_relative_to(root) or path == root:
        raise InvalidArgumentError(f'artifact {name!r} is not inside {config.out_dir!r}')
    return path
