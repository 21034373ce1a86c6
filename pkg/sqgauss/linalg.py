'''Small dense linear algebra helpers

Lower-triangular packing, the stable softplus pair, and triangular solves
that operate on stacks of matrices (leading batch axes).
'''
import numpy as np
from scipy.special import expit

from .errors import InvalidInputError


def tri_size(n):
    '''Number of entries in the lower triangle of an n x n matrix'''
    return n * (n + 1) // 2


def dim_from_tri_size(size):
    '''Inverse of tri_size; raises InvalidInputError for non-triangular sizes'''
    n = int((np.sqrt(8 * size + 1) - 1) // 2)
    if n < 1 or tri_size(n) != size:
        raise InvalidInputError('Packed triangle length {} is not n(n+1)/2 '
                                'for any n >= 1'.format(size))
    return n


def tril_indices(n):
    '''Row-major indices of the lower triangle: (0,0), (1,0), (1,1), (2,0)...'''
    return np.tril_indices(n)


def unpack_lower(entries, n=None):
    '''Unpack row-major lower-triangle entries into square matrices

    Parameters
    ----------
    entries : array_like, shape (..., n(n+1)/2)
    n : int, optional
        Matrix dimension. Inferred from the last axis if omitted.

    Returns
    -------
    matrix : ndarray, shape (..., n, n)
    '''
    entries = np.asarray(entries, dtype=np.float64)
    if n is None:
        n = dim_from_tri_size(entries.shape[-1])
    elif entries.shape[-1] != tri_size(n):
        raise InvalidInputError('Expected {} packed entries for n={}, got {}'
                                ''.format(tri_size(n), n, entries.shape[-1]))

    matrix = np.zeros(entries.shape[:-1] + (n, n))
    rows, cols = tril_indices(n)
    matrix[..., rows, cols] = entries
    return matrix


def pack_lower(matrix):
    '''Pack the lower triangle of (stacks of) square matrices, row-major'''
    matrix = np.asarray(matrix, dtype=np.float64)
    rows, cols = tril_indices(matrix.shape[-1])
    return matrix[..., rows, cols]


def softplus(x):
    '''ln(1 + e^x), evaluated as max(x, 0) + ln(1 + e^-|x|)'''
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_inverse(y):
    '''Inverse of softplus for y > 0: y + ln(1 - e^-y)'''
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise InvalidInputError('softplus_inverse is defined for positive '
                                'values only')
    return y + np.log(-np.expm1(-y))


def softplus_grad(x):
    '''Derivative of softplus, 1 / (1 + e^-x)'''
    return expit(np.asarray(x, dtype=np.float64))


def solve_lower(lower, rhs):
    '''Forward substitution for L x = b over leading batch axes

    Parameters
    ----------
    lower : ndarray, shape (..., n, n)
        Lower-triangular matrices with non-zero diagonals
    rhs : ndarray, shape (..., n)

    Returns
    -------
    x : ndarray, shape (..., n)
    '''
    lower = np.asarray(lower, dtype=np.float64)
    x = np.array(np.broadcast_to(rhs, np.broadcast_shapes(
        np.shape(rhs), lower.shape[:-1])), dtype=np.float64)

    n = lower.shape[-1]
    for i in range(n):
        acc = np.einsum('...j,...j->...', lower[..., i, :i], x[..., :i])
        x[..., i] = (x[..., i] - acc) / lower[..., i, i]
    return x


def solve_lower_transpose(lower, rhs):
    '''Back substitution for L^T x = b over leading batch axes'''
    lower = np.asarray(lower, dtype=np.float64)
    x = np.array(np.broadcast_to(rhs, np.broadcast_shapes(
        np.shape(rhs), lower.shape[:-1])), dtype=np.float64)

    n = lower.shape[-1]
    for i in reversed(range(n)):
        acc = np.einsum('...j,...j->...', lower[..., i + 1:, i],
                        x[..., i + 1:])
        x[..., i] = (x[..., i] - acc) / lower[..., i, i]
    return x


def symmetrize(matrix):
    '''Average a matrix with its transpose (exactly symmetric result)'''
    matrix = np.asarray(matrix, dtype=np.float64)
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))
