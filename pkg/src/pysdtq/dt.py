import logging
import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import EmptySetError, InvalidArgumentError
from .grid import ScalarField


log = logging.getLogger(__name__)

METRICS = ('euclidean', 'manhattan', 'chebyshev', 'chamfer')


#
@dataclass(frozen=True)
class Metric:
    '''
    The distance rule g between lattice offsets.

    Attributes:

    kind : 'euclidean', 'manhattan', 'chebyshev' or 'chamfer'.
    axial : chamfer weight of a step along one axis.
    diagonal : chamfer weight of a step along two axes.
    corner : chamfer weight of a step along three axes (3D). Defaults
             to 2 * diagonal - axial.

    Chamfer lengths are divided by the axial weight, so a single
    axial step always measures one sample.
    '''
    kind: str = 'euclidean'
    axial: float = 1.0
    diagonal: float = 1.0
    corner: float = None

    def __post_init__(self):
        if self.kind not in METRICS:
            raise InvalidArgumentError(f'unknown metric {self.kind!r}, expected one of {METRICS}')
        if self.kind == 'chamfer':
            a, b = float(self.axial), float(self.diagonal)
            if not (a > 0 and a <= b <= 2 * a):
                raise InvalidArgumentError(
                    f'chamfer weights must satisfy 0 < axial <= diagonal <= 2*axial, got ({a}, {b})')
            c = 2 * b - a if self.corner is None else float(self.corner)
            if not (b <= c <= a + b):
                raise InvalidArgumentError(
                    f'chamfer corner weight must satisfy diagonal <= corner <= axial+diagonal, got {c}')
            object.__setattr__(self, 'axial', a)
            object.__setattr__(self, 'diagonal', b)
            object.__setattr__(self, 'corner', c)

    #
    @classmethod
    def parse(cls,text):
        '''
        Parses 'euclidean', 'manhattan', 'chebyshev' or
        'chamfer:<axial>,<diagonal>[,<corner>]'.
        '''
        kind, _, weights = text.strip().partition(':')
        kind = kind.strip().lower()
        if kind != 'chamfer':
            if weights:
                raise InvalidArgumentError(f'metric {kind!r} takes no weights')
            return cls(kind)
        try:
            w = [float(x) for x in weights.split(',') if x.strip()]
        except ValueError:
            raise InvalidArgumentError(f'bad chamfer weights {weights!r}') from None
        if len(w) not in (2, 3):
            raise InvalidArgumentError(f'chamfer needs 2 or 3 weights, got {weights!r}')
        return cls('chamfer', *w)

    #
    def to_text(self):
        if self.kind != 'chamfer':
            return self.kind
        return f'chamfer:{self.axial!r},{self.diagonal!r},{self.corner!r}'

    #
    def lattice_distance(self,z):
        '''
        g(z, 0) for integer offset vectors z, given as an array whose last
        axis holds the components.
        '''
        z = np.abs(np.asarray(z, dtype=np.float64))
        match self.kind:
            case 'euclidean':
                return np.sqrt(np.sum(z * z, axis=-1))
            case 'manhattan':
                return np.sum(z, axis=-1)
            case 'chebyshev':
                return np.max(z, axis=-1)
            case 'chamfer':
                # Components sorted descending: p >= q >= r.
                s = -np.sort(-z, axis=-1)
                p = s[..., 0]
                q = s[..., 1] if s.shape[-1] > 1 else np.zeros_like(p)
                r = s[..., 2] if s.shape[-1] > 2 else np.zeros_like(p)
                length = self.corner * r + self.diagonal * (q - r) + self.axial * (p - q)
                return length / self.axial

    #
    def step_weight(self,nonzero):
        '''
        Normalized chamfer weight of a neighbour step along `nonzero` axes.
        '''
        return (self.axial, self.diagonal, self.corner)[nonzero - 1] / self.axial


#
def _target_mask(b,target):
    match target:
        case 'foreground':
            mask = b.foreground
        case 'background':
            mask = b.background
        case _:
            raise InvalidArgumentError(f"target must be 'foreground' or 'background', got {target!r}")
    if not mask.any():
        raise EmptySetError(f'the {target} of the binary field is empty; distance is undefined')
    return mask


#
def _chamfer_distance(mask,metric):
    '''
    Shortest weighted path from every cell to the target cells over the
    3**n - 1 neighbourhood, in samples.
    '''
    dims = mask.shape
    index = np.arange(mask.size).reshape(dims)
    rows, cols, weights = [], [], []
    for step in itertools.product((-1, 0, 1), repeat=len(dims)):
        nonzero = sum(1 for s in step if s)
        if nonzero == 0:
            continue
        src = tuple(slice(max(0, -s), d - max(0, s)) for s, d in zip(step, dims))
        dst = tuple(slice(max(0, s), d - max(0, -s)) for s, d in zip(step, dims))
        a = index[src].ravel()
        rows.append(a)
        cols.append(index[dst].ravel())
        weights.append(np.full(a.size, metric.step_weight(nonzero)))
    graph = coo_matrix((np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(mask.size, mask.size)).tocsr()
    d = dijkstra(graph, directed=False, indices=np.flatnonzero(mask), min_only=True)
    return d.reshape(dims)


#
def distance_transform(b,metric=Metric(),target='foreground'):
    '''
    The distance transform d(x, T): for every cell, h times the minimum
    lattice distance g to a cell of the target set T.

    Parameters:

    b : BinaryField
    metric : Metric, default euclidean.
    target : 'foreground' (T = A) or 'background' (T = complement of A).

    Returns:

    ScalarField in physical units; 0 on the target cells.

    Euclidean, manhattan and chebyshev transforms are exact.
    '''
    mask = _target_mask(b, target)
    others = ~mask
    match metric.kind:
        case 'euclidean':
            d = ndimage.distance_transform_edt(others)
        case 'manhattan':
            d = ndimage.distance_transform_cdt(others, metric='taxicab').astype(np.float64)
        case 'chebyshev':
            d = ndimage.distance_transform_cdt(others, metric='chessboard').astype(np.float64)
        case 'chamfer':
            d = _chamfer_distance(mask, metric)
    return ScalarField(b.spec, d * b.spec.spacing)


#
def _envelope_1d(f):
    '''
    Lower envelope of the parabolas (p - q)**2 + f[q] over the sites q
    with finite f. Ties go to the smaller q.

    Returns (squared distance, argmin site) per position; inf / -1 when
    the line holds no site.
    '''
    n = f.size
    d = np.full(n, np.inf)
    arg = np.full(n, -1, dtype=np.int64)
    sites = np.flatnonzero(np.isfinite(f))
    if sites.size == 0:
        return d, arg
    v = [int(sites[0])]
    z = [-np.inf, np.inf]
    for q in sites[1:]:
        q = int(q)
        fq = f[q] + q * q
        while True:
            w = v[-1]
            s = (fq - (f[w] + w * w)) / (2 * (q - w))
            if s <= z[-2]:
                v.pop()
                z.pop()
            else:
                break
        v.append(q)
        z[-1] = s
        z.append(np.inf)
    k = 0
    for p in range(n):
        while z[k + 1] < p:
            k += 1
        d[p] = (p - v[k]) ** 2 + f[v[k]]
        arg[p] = v[k]
    return d, arg


#
def feature_transform(b,target='foreground'):
    '''
    For every cell, the row-major linear index of one nearest target cell
    under the euclidean metric. Among equidistant target cells the one with
    the smallest linear index is returned.

    Parameters:

    b : BinaryField
    target : 'foreground' or 'background'.

    Returns:

    numpy int64 array of shape b.spec.dims. Use np.unravel_index to get
    index vectors.
    '''
    mask = _target_mask(b, target)
    dims = mask.shape
    ndim = len(dims)
    f = np.where(mask, 0.0, np.inf)
    # features[..., a] is the index along axis a of the current nearest site.
    features = np.zeros(dims + (ndim,), dtype=np.int64)
    features[..., :] = np.stack(np.indices(dims), axis=-1)

    # Last axis first, so that ties resolve to the lexicographically
    # smallest index vector, which is the smallest linear index.
    for axis in reversed(range(ndim)):
        f_moved = np.moveaxis(f, axis, -1)
        feat_moved = np.moveaxis(features, axis, -2)
        new_f = np.empty_like(f_moved)
        new_feat = np.empty_like(feat_moved)
        for line in np.ndindex(*f_moved.shape[:-1]):
            d, arg = _envelope_1d(f_moved[line])
            new_f[line] = d
            found = arg >= 0
            new_feat[line] = feat_moved[line][np.where(found, arg, 0)]
            new_feat[line][found, axis] = arg[found]
        f = np.moveaxis(new_f, -1, axis)
        features = np.moveaxis(new_feat, -2, axis)

    return np.ravel_multi_index(tuple(np.moveaxis(features, -1, 0)), dims)


#
def signed_distance_transform(b,metric=Metric(),corrected=True):
    '''
    The signed distance transform of a binary image, negative inside.

    Uncorrected:  d(x, A) on the background, -d(x, A^C) on A.
    Corrected:    -h/2 + d(x, A) on the background, h/2 - d(x, A^C) on A.
                  The zero crossing falls halfway between the edge samples
                  and no cell is ever exactly 0.

    Parameters:

    b : BinaryField with non-empty foreground and background.
    metric : Metric
    corrected : apply the half sample offset.

    Returns:

    ScalarField
    '''
    if not b.foreground.any() or not b.background.any():
        raise EmptySetError('signed distance needs a non-empty foreground and background '
                            f'({b.count()} of {b.spec.size} cells are foreground)')
    outside = distance_transform(b, metric, 'foreground').values
    inside = distance_transform(b, metric, 'background').values
    half = b.spec.spacing / 2 if corrected else 0.0
    phi = np.where(b.foreground, half - inside, outside - half)
    log.debug('%s SDT of %s grid, %d foreground cells',
              'corrected' if corrected else 'uncorrected', b.spec.dims, b.count())
    return ScalarField(b.spec, phi)
