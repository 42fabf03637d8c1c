import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


log = logging.getLogger(__name__)

# Cells are addressed with int64 linear indices.
MAX_CELLS = np.iinfo(np.int64).max


#
def _count(d):
    try:
        n = int(d)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f'dims must be integers, got {d!r}') from None
    if n != d:
        raise InvalidArgumentError(f'dims must be integers, got {d!r}')
    return n


#
@dataclass(frozen=True, eq=False)
class GridSpec:
    '''
    The sample lattice. Sample n sits at the physical coordinate
    origin + spacing * n, per axis.

    Attributes:

    dims : per-axis sample counts, 1 to 3 axes.
    spacing : h, the sampling period. The lattice is isotropic.
    origin : physical coordinate of sample index 0 per axis. Defaults to zeros.
    '''
    dims: tuple
    spacing: float = 1.0
    origin: tuple = None

    def __post_init__(self):
        dims = tuple(_count(d) for d in (self.dims if np.ndim(self.dims) else (self.dims,)))
        if not 1 <= len(dims) <= 3:
            raise InvalidArgumentError(f'grid must have 1 to 3 axes, got {len(dims)}')
        if any(d < 1 for d in dims):
            raise InvalidArgumentError(f'all dims must be >= 1, got {dims}')
        if int(np.prod(dims, dtype=object)) > MAX_CELLS:
            raise InvalidArgumentError(f'grid {dims} has too many cells for int64 indexing')
        spacing = float(self.spacing)
        if not (np.isfinite(spacing) and spacing > 0):
            raise InvalidArgumentError(f'spacing must be a positive finite number, got {self.spacing}')
        if self.origin is None:
            origin = (0.0,) * len(dims)
        else:
            origin = tuple(float(o) for o in self.origin)
        if len(origin) != len(dims):
            raise InvalidArgumentError(f'origin {origin} does not match {len(dims)} axes')
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'spacing', spacing)
        object.__setattr__(self, 'origin', origin)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def size(self):
        '''
        N, the total number of cells.
        '''
        return int(np.prod(self.dims))

    @property
    def h(self):
        return self.spacing

    #
    def coordinates(self,axis):
        '''
        Returns the physical coordinates of the samples along one axis.
        '''
        if not 0 <= axis < self.ndim:
            raise InvalidArgumentError(f'axis {axis} out of range for a {self.ndim}D grid')
        return self.origin[axis] + self.spacing * np.arange(self.dims[axis], dtype=np.float64)

    #
    def mesh(self):
        '''
        Returns one array per axis, each of shape dims, holding the
        physical coordinate of every cell along that axis.
        '''
        return np.meshgrid(*(self.coordinates(a) for a in range(self.ndim)), indexing='ij')

    #
    def coordinate(self,index):
        '''
        Physical coordinate of a single index vector.
        '''
        return tuple(o + self.spacing * int(n) for o, n in zip(self.origin, index))

    #
    def same_as(self,other):
        return (self.dims == other.dims and self.spacing == other.spacing
                and self.origin == other.origin)

    def __eq__(self,other):
        return isinstance(other, GridSpec) and self.same_as(other)

    def __hash__(self):
        return hash((self.dims, self.spacing, self.origin))


#
def _as_grid_array(spec,values,dtype):
    a = np.array(values, dtype=dtype, copy=True)
    if a.shape != spec.dims:
        if a.size != spec.size:
            raise InvalidArgumentError(f'{a.size} values do not fit grid {spec.dims} ({spec.size} cells)')
        a = a.reshape(spec.dims)
    a.setflags(write=False)
    return a


#
@dataclass(frozen=True, eq=False)
class ScalarField:
    '''
    A real value per cell. phi, its quantized and dithered versions and all
    derivative fields are ScalarFields; they differ in provenance only.
    Values are stored row-major (last axis fastest) and are read-only.
    '''
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        a = _as_grid_array(self.spec, self.values, np.float64)
        if not np.all(np.isfinite(a)):
            bad = int(np.count_nonzero(~np.isfinite(a)))
            raise InvalidArgumentError(f'scalar field holds {bad} non-finite values')
        object.__setattr__(self, 'values', a)

    #
    def like(self,values):
        '''
        A new field on the same grid.
        '''
        return ScalarField(self.spec, values)


#
@dataclass(frozen=True, eq=False)
class BinaryField:
    '''
    One bit per cell. Cells holding 1 form the set A (foreground),
    cells holding 0 its complement.
    '''
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values)
        if a.dtype != np.bool_:
            if not np.all((a == 0) | (a == 1)):
                raise InvalidArgumentError('binary field values must be 0 or 1')
        object.__setattr__(self, 'values', _as_grid_array(self.spec, a, np.bool_))

    @property
    def foreground(self):
        return self.values

    @property
    def background(self):
        return ~self.values

    #
    def count(self):
        return int(np.count_nonzero(self.values))


#
@dataclass(frozen=True)
class ShapeParams:
    '''
    An analytic shape.

    Attributes:

    kind : 'sphere' or 'polygon'.
    center : x0, per axis (spheres).
    radius : r, physical units (spheres).
    vertices : polygon corners, each (coordinate along axis 0, coordinate along axis 1).
    '''
    kind: str
    center: tuple = ()
    radius: float = 0.0
    vertices: tuple = ()

    def __post_init__(self):
        match self.kind:
            case 'sphere':
                center = tuple(float(c) for c in self.center)
                if not 1 <= len(center) <= 3:
                    raise InvalidArgumentError(f'sphere center must have 1 to 3 coordinates, got {center}')
                radius = float(self.radius)
                if not (np.isfinite(radius) and radius > 0):
                    raise InvalidArgumentError(f'sphere radius must be > 0, got {self.radius}')
                object.__setattr__(self, 'center', center)
                object.__setattr__(self, 'radius', radius)
            case 'polygon':
                try:
                    vertices = tuple(tuple(float(x) for x in v) for v in self.vertices)
                except (TypeError, ValueError):
                    raise InvalidArgumentError(f'polygon vertices must be coordinate pairs, got {self.vertices}') from None
                if any(len(v) != 2 for v in vertices):
                    raise InvalidArgumentError(f'polygon vertices must have 2 coordinates each, got {vertices}')
                if len(vertices) < 3:
                    raise InvalidArgumentError(f'polygon needs at least 3 vertices, got {len(vertices)}')
                object.__setattr__(self, 'vertices', vertices)
            case _:
                raise InvalidArgumentError(f"shape kind must be 'sphere' or 'polygon', got {self.kind!r}")

    #
    @classmethod
    def sphere(cls,center,radius):
        return cls('sphere', center=tuple(center), radius=radius)

    #
    @classmethod
    def polygon(cls,vertices):
        return cls('polygon', vertices=tuple(vertices))


#
def _sphere_offsets(spec,shape):
    if shape.kind != 'sphere':
        raise InvalidArgumentError(f'expected a sphere, got a {shape.kind}')
    if len(shape.center) != spec.ndim:
        raise InvalidArgumentError(
            f'sphere center {shape.center} has {len(shape.center)} coordinates, grid has {spec.ndim} axes')
    return [x - c for x, c in zip(spec.mesh(), shape.center)]


#
def _norm(offsets):
    if len(offsets) == 1:
        return np.abs(offsets[0])
    return np.sqrt(sum(d * d for d in offsets))


#
def sample_sphere_sdf(spec,shape):
    '''
    Samples the exact signed distance function of a sphere,
    phi(x) = ||x - x0|| - r, at every cell.

    Parameters:

    spec : GridSpec of the samples.
    shape : ShapeParams of kind 'sphere' with as many center coordinates as grid axes.

    Returns:

    ScalarField, negative inside the sphere.
    '''
    rho = _norm(_sphere_offsets(spec, shape))
    return ScalarField(spec, rho - shape.radius)


#
def sample_sphere_gradient(spec,shape):
    '''
    The analytic gradient of the sphere's distance function, (x - x0)/||x - x0||,
    as one ScalarField per axis. The gradient is undefined at the center;
    it is set to 0 there.
    '''
    offsets = _sphere_offsets(spec, shape)
    rho = _norm(offsets)
    safe = np.where(rho > 0, rho, 1.0)
    return [ScalarField(spec, np.where(rho > 0, d / safe, 0.0)) for d in offsets]


#
def sample_sphere_hessian(spec,shape):
    '''
    The analytic second derivatives of the sphere's distance function,
    (delta_ab - n_a n_b) / rho, keyed by the axis pair (a, b) with a <= b.
    Set to 0 at the center.
    '''
    offsets = _sphere_offsets(spec, shape)
    rho = _norm(offsets)
    safe = np.where(rho > 0, rho, 1.0)
    n = [d / safe for d in offsets]
    hessian = {}
    for a in range(spec.ndim):
        for b in range(a, spec.ndim):
            value = ((1.0 if a == b else 0.0) - n[a] * n[b]) / safe
            hessian[(a, b)] = ScalarField(spec, np.where(rho > 0, value, 0.0))
    return hessian


#
def _on_segment(px,py,x1,y1,x2,y2):
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    within = ((np.minimum(x1, x2) <= px) & (px <= np.maximum(x1, x2))
              & (np.minimum(y1, y2) <= py) & (py <= np.maximum(y1, y2)))
    return (cross == 0) & within


#
def _inside_polygon(px,py,vertices):
    # Even-odd rule; points on an edge are not inside.
    inside = np.zeros(px.shape, dtype=bool)
    boundary = np.zeros(px.shape, dtype=bool)
    n = len(vertices)
    for k in range(n):
        x1, y1 = vertices[k]
        x2, y2 = vertices[(k + 1) % n]
        boundary |= _on_segment(px, py, x1, y1, x2, y2)
        if y1 == y2:
            continue
        straddles = (y1 > py) != (y2 > py)
        x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (px < x_cross)
    return inside & ~boundary


#
def rasterize(spec,shape):
    '''
    Builds the binary image of a shape: a cell is 1 iff its physical
    position lies strictly inside the shape.

    Parameters:

    spec : GridSpec of the samples. Polygons need a 2D grid.
    shape : ShapeParams.

    Returns:

    BinaryField
    '''
    match shape.kind:
        case 'sphere':
            return binarize(sample_sphere_sdf(spec, shape))
        case 'polygon':
            if spec.ndim != 2:
                raise InvalidArgumentError(f'polygons need a 2D grid, got {spec.ndim}D')
            px, py = spec.mesh()
            return BinaryField(spec, _inside_polygon(px, py, shape.vertices))


#
def binarize(phi):
    '''
    The Heaviside reconstruction I = H(-phi), with H(0) = 0: a cell is 1 iff phi < 0.
    '''
    return BinaryField(phi.spec, phi.values < 0)
