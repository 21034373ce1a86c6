'''Model checkpoint files

Layout (all integers and floats little-endian)::

    offset  size  content
    0       8     magic b'SQGHEAD1'
    8       4     uint32 header length H
    12      H     UTF-8 JSON header, keys sorted, no whitespace:
                    format_version, input_dim, hidden_dims, variant,
                    dropout_rate, seed, n_dims,
                    affine_A (row-major list), affine_b,
                    layer_shapes (list of [rows, cols])
    12+H    ...   for each layer k: W_k row-major float64, then b_k float64

The same model always serializes to the same bytes, and loading restores
every float bit-exactly.
'''
import json
import logging
import struct

import numpy as np

from .errors import SchemaError
from .gaussian import AffineMap
from .head import HeadConfig, HeadModel


logger = logging.getLogger(__name__)

MAGIC = b'SQGHEAD1'
FORMAT_VERSION = 1
_FLOAT = np.dtype('<f8')


def _header(model):
    config = model.config
    return {'format_version': FORMAT_VERSION,
            'input_dim': config.input_dim,
            'hidden_dims': list(config.hidden_dims),
            'variant': config.variant,
            'dropout_rate': config.dropout_rate,
            'seed': config.seed,
            'n_dims': config.n_dims,
            'affine_A': model.affine.A.ravel().tolist(),
            'affine_b': model.affine.b.tolist(),
            'layer_shapes': [list(w.shape) for w in model.weights],
            }


def to_bytes(model):
    '''Serialize a HeadModel'''
    header = json.dumps(_header(model), sort_keys=True,
                        separators=(',', ':')).encode('utf-8')
    chunks = [MAGIC, struct.pack('<I', len(header)), header]
    for w, b in zip(model.weights, model.biases):
        chunks.append(np.ascontiguousarray(w, dtype=_FLOAT).tobytes())
        chunks.append(np.ascontiguousarray(b, dtype=_FLOAT).tobytes())
    return b''.join(chunks)


def _parse_header(data, source):
    if data[:len(MAGIC)] != MAGIC:
        raise SchemaError('{} is not a sqgauss checkpoint (bad magic)'
                          ''.format(source))
    try:
        size, = struct.unpack_from('<I', data, len(MAGIC))
        start = len(MAGIC) + 4
        header = json.loads(data[start:start + size].decode('utf-8'))
    except (struct.error, UnicodeDecodeError, ValueError) as ex:
        raise SchemaError('{}: unreadable checkpoint header ({})'
                          ''.format(source, ex)) from None

    version = header.get('format_version')
    if version != FORMAT_VERSION:
        raise SchemaError('{}: unsupported checkpoint version {!r}'
                          ''.format(source, version))
    return header, start + size


def from_bytes(data, source='<bytes>'):
    '''Deserialize a HeadModel'''
    header, offset = _parse_header(data, source)
    try:
        config = HeadConfig(input_dim=header['input_dim'],
                            hidden_dims=tuple(header['hidden_dims']),
                            variant=header['variant'],
                            dropout_rate=header['dropout_rate'],
                            seed=header['seed'],
                            n_dims=header['n_dims'])
        n = config.n_dims
        affine = AffineMap(np.reshape(header['affine_A'], (n, n)),
                           header['affine_b'])
        shapes = [tuple(shape) for shape in header['layer_shapes']]
    except (KeyError, TypeError, ValueError) as ex:
        raise SchemaError('{}: invalid checkpoint header ({})'
                          ''.format(source, ex)) from None

    expected = list(zip(config.layer_dims[1:], config.layer_dims[:-1]))
    if shapes != expected:
        raise SchemaError('{}: layer shapes {} do not match the configuration '
                          '{}'.format(source, shapes, expected))

    weights, biases = [], []
    for rows, cols in shapes:
        for shape in ((rows, cols), (rows, )):
            count = int(np.prod(shape))
            end = offset + count * _FLOAT.itemsize
            if end > len(data):
                raise SchemaError('{}: checkpoint truncated'.format(source))
            array = np.frombuffer(data, dtype=_FLOAT, count=count,
                                  offset=offset).reshape(shape)
            (weights if len(shape) == 2 else biases).append(
                array.astype(np.float64))
            offset = end

    if offset != len(data):
        raise SchemaError('{}: {} trailing bytes after the last layer'
                          ''.format(source, len(data) - offset))
    return HeadModel(config, weights, biases, affine=affine)


def save_checkpoint(path, model):
    '''Write a model checkpoint to ``path``'''
    data = to_bytes(model)
    with open(path, 'wb') as f:
        f.write(data)
    logger.debug('Wrote %d-byte checkpoint to %s', len(data), path)


def load_checkpoint(path):
    '''Read a model checkpoint from ``path``'''
    with open(path, 'rb') as f:
        data = f.read()
    return from_bytes(data, source=str(path))


def read_header(path):
    '''The checkpoint's JSON header, without loading the weights'''
    with open(path, 'rb') as f:
        data = f.read(len(MAGIC) + 4)
        if len(data) < len(MAGIC) + 4:
            raise SchemaError('{}: checkpoint truncated'.format(path))
        size, = struct.unpack_from('<I', data, len(MAGIC))
        data += f.read(size)
    header, _ = _parse_header(data, str(path))
    return header
