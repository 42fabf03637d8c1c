import csv
import struct
import logging
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .grid import GridSpec, ScalarField, BinaryField


log = logging.getLogger(__name__)

MAGIC = b'SDF1'
KIND_SCALAR = 0
KIND_BINARY = 1

# magic, payload kind, ndim
_PREAMBLE = struct.Struct('<4sBB')


#
def fmt(x):
    '''
    A real number as a 17 significant digit decimal.
    '''
    return f'{float(x):.17g}'


#
def encode_field(field):
    '''
    Encodes a ScalarField or BinaryField in the SDF1 format:

    magic 'SDF1', u8 payload kind (0 = float64, 1 = u8 binary), u8 ndim,
    u32 dims per axis, f64 spacing, f64 origin per axis, then the row-major
    payload.
    '''
    spec = field.spec
    if isinstance(field, BinaryField):
        kind = KIND_BINARY
        payload = field.values.astype('u1').tobytes()
    elif isinstance(field, ScalarField):
        kind = KIND_SCALAR
        payload = field.values.astype('<f8').tobytes()
    else:
        raise InvalidArgumentError(f'cannot encode {type(field).__name__}')
    if any(d > 0xFFFFFFFF for d in spec.dims):
        raise InvalidArgumentError(f'dims {spec.dims} do not fit u32')
    header = _PREAMBLE.pack(MAGIC, kind, spec.ndim)
    header += struct.pack(f'<{spec.ndim}I', *spec.dims)
    header += struct.pack('<d', spec.spacing)
    header += struct.pack(f'<{spec.ndim}d', *spec.origin)
    return header + payload


#
def decode_field(data):
    '''
    Decodes SDF1 bytes.

    Returns:

    ScalarField or BinaryField

    Raises FormatError with the byte offset of the problem.
    '''
    offset = 0

    def take(n,what):
        nonlocal offset
        if len(data) - offset < n:
            raise FormatError(f'truncated {what}: expected {n} bytes, got {len(data) - offset}',
                              offset, expected=n, actual=len(data) - offset)
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    magic, kind, ndim = _PREAMBLE.unpack(take(_PREAMBLE.size, 'preamble'))
    if magic != MAGIC:
        raise FormatError(f'bad magic {magic!r}, expected {MAGIC!r}', 0)
    if kind not in (KIND_SCALAR, KIND_BINARY):
        raise FormatError(f'unknown payload kind {kind}', 4)
    if not 1 <= ndim <= 3:
        raise FormatError(f'ndim must be 1 to 3, got {ndim}', 5)
    dims_at = offset
    dims = struct.unpack(f'<{ndim}I', take(4 * ndim, 'dims'))
    if any(d == 0 for d in dims):
        raise FormatError(f'zero-length axis in dims {dims}', dims_at)
    (spacing,) = struct.unpack('<d', take(8, 'spacing'))
    origin = struct.unpack(f'<{ndim}d', take(8 * ndim, 'origin'))

    itemsize = 8 if kind == KIND_SCALAR else 1
    cells = 1
    for d in dims:
        cells *= d
    expected = cells * itemsize
    if expected > np.iinfo(np.int64).max:
        raise FormatError(f'dims {dims} overflow the index type', dims_at)
    actual = len(data) - offset
    if actual != expected:
        raise FormatError(f'payload size mismatch: expected {expected} bytes, got {actual}',
                          offset, expected=expected, actual=actual)
    try:
        spec = GridSpec(dims, spacing, origin)
    except InvalidArgumentError as e:
        raise FormatError(f'invalid grid header: {e}', dims_at) from e

    payload = bytes(data[offset:])
    if kind == KIND_SCALAR:
        values = np.frombuffer(payload, dtype='<f8').reshape(dims)
        try:
            return ScalarField(spec, values)
        except InvalidArgumentError as e:
            raise FormatError(str(e), offset) from e
    values = np.frombuffer(payload, dtype='u1')
    if np.any(values > 1):
        bad = int(np.flatnonzero(values > 1)[0])
        raise FormatError(f'binary payload holds value {values[bad]}', offset + bad)
    return BinaryField(spec, values.reshape(dims).astype(bool))


#
def save_field(path,field):
    '''
    Writes a field to an SDF1 file.
    '''
    path = Path(path)
    path.write_bytes(encode_field(field))
    log.debug('saved %s %s to %s', type(field).__name__, field.spec.dims, path)


#
def load_field(path):
    '''
    Reads a field from an SDF1 file.

    Returns:

    ScalarField or BinaryField, exactly as saved.
    '''
    return decode_field(Path(path).read_bytes())


#
def write_rows(path,header,rows):
    '''
    Writes a CSV file. Reals are written with 17 significant digits,
    None as an empty cell.
    '''
    def cell(v):
        if v is None:
            return ''
        if isinstance(v, (bool, np.bool_)):
            return str(int(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return fmt(v)
        return str(v)

    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell(v) for v in row])


#
def export_csv(field,path):
    '''
    Writes a 1D or 2D field as CSV with header 'i,value' or 'i,j,value',
    one row per cell in row-major order.
    '''
    spec = field.spec
    if spec.ndim > 2:
        raise InvalidArgumentError(f'CSV export supports 1D and 2D fields, got {spec.ndim}D')
    header = ['i', 'value'] if spec.ndim == 1 else ['i', 'j', 'value']
    values = field.values
    if values.dtype == np.bool_:
        values = values.astype(np.int64)
    rows = (list(index) + [values[index]] for index in np.ndindex(*spec.dims))
    write_rows(path, header, rows)


#
def export_pgm(field,path):
    '''
    Writes a 1D or 2D field as a binary P5 PGM image, maxval 255.
    Values are linearly normalized; the original range is kept in
    a '# min=... max=...' comment line. For viewing only.
    '''
    spec = field.spec
    if spec.ndim > 2:
        raise InvalidArgumentError(f'PGM export supports 1D and 2D fields, got {spec.ndim}D')
    values = field.values.astype(np.float64)
    if spec.ndim == 1:
        values = values[np.newaxis, :]
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        pixels = np.round((values - lo) / (hi - lo) * 255.0)
    else:
        pixels = np.zeros_like(values)
    height, width = values.shape
    header = f'P5\n# min={fmt(lo)} max={fmt(hi)}\n{width} {height}\n255\n'.encode('ascii')
    Path(path).write_bytes(header + pixels.astype(np.uint8).tobytes())
