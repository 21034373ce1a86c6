'''Multivariate Gaussian value types and exact transforms

The covariance of every GaussianParams is carried together with its lower
Cholesky factor; densities and sampling only ever use triangular solves and
products against that factor.
'''
import logging

import numpy as np
from scipy import linalg

from .errors import InvalidInputError
from .linalg import (dim_from_tri_size, pack_lower, softplus,
                     softplus_inverse, symmetrize, unpack_lower)


logger = logging.getLogger(__name__)

DIAGONAL_FLOOR = 1e-6
SYMMETRY_TOL = 1e-12
FACTOR_TOL = 1e-10
MIN_ABS_DET = 1e-12
LOG_2PI = np.log(2 * np.pi)


def _as_vector(values, name, n=None):
    values = np.array(values, dtype=np.float64)
    if values.ndim != 1:
        raise InvalidInputError('{} must be a vector (shape={})'
                                ''.format(name, values.shape))
    if n is not None and len(values) != n:
        raise InvalidInputError('{} has length {}, expected {}'
                                ''.format(name, len(values), n))
    if not np.all(np.isfinite(values)):
        raise InvalidInputError('{} has non-finite entries: {}'
                                ''.format(name, values))
    return values


def _frozen(array):
    array.setflags(write=False)
    return array


def _checked_square(cov, n=None):
    cov = np.array(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidInputError('Covariance must be square (shape={})'
                                ''.format(cov.shape))
    if n is not None and cov.shape[0] != n:
        raise InvalidInputError('Covariance is {0}x{0}, expected {1}x{1}'
                                ''.format(cov.shape[0], n))
    if not np.all(np.isfinite(cov)):
        raise InvalidInputError('Covariance has non-finite entries')

    asym = np.max(np.abs(cov - cov.T))
    if asym > SYMMETRY_TOL:
        raise InvalidInputError('Covariance is not symmetric (max '
                                'asymmetry={:g})'.format(asym))
    return cov


def check_covariance(cov, n=None):
    '''Validate a covariance matrix and return its lower Cholesky factor

    Raises
    ------
    InvalidInputError
        If cov is not square, not finite, not symmetric to within 1e-12, or
        not positive definite.
    '''
    cov = _checked_square(cov, n=n)
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as ex:
        raise InvalidInputError('Covariance is not positive definite ({})'
                                ''.format(ex)) from None


def check_factor(chol, cov):
    '''Validate a lower factor supplied alongside its covariance

    The factor must be lower triangular with a finite, strictly positive
    diagonal, and chol chol^T must reproduce cov to within 1e-10 relative
    Frobenius error. Such a factor certifies positive definiteness without
    refactoring cov, which float64 cannot always do once cond(cov) nears
    1e16.
    '''
    chol = np.array(chol, dtype=np.float64)
    if chol.shape != cov.shape:
        raise InvalidInputError('Factor shape {} does not match covariance '
                                'shape {}'.format(chol.shape, cov.shape))
    if not np.all(np.isfinite(chol)):
        raise InvalidInputError('Factor has non-finite entries')
    if np.any(np.triu(chol, 1)):
        raise InvalidInputError('Factor is not lower triangular')
    diag = np.diag(chol)
    if np.any(diag <= 0):
        raise InvalidInputError('Factor diagonal is not positive: {}'
                                ''.format(diag))

    err = (np.linalg.norm(chol @ chol.T - cov) /
           max(np.linalg.norm(cov), np.finfo(float).tiny))
    if err > FACTOR_TOL:
        raise InvalidInputError('Factor does not reproduce the covariance '
                                '(relative error={:g})'.format(err))
    return chol


def factor_from_rows(rows):
    '''Lower factor F, positive diagonal, with F F^T = rows rows^T

    ``rows`` has shape (k, n) with k <= n and full row rank. The factor comes
    from the triangle of a QR decomposition of rows^T, so rows rows^T itself
    is never factored.
    '''
    rows = np.asarray(rows, dtype=np.float64)
    k, n = rows.shape
    if k > n:
        raise InvalidInputError('Need at most {} rows, got {}'.format(n, k))
    head = rows[:, :k]
    if (not np.any(np.triu(head, 1)) and not np.any(rows[:, k:]) and
            np.all(np.diag(head) > 0)):
        return head.copy()

    r = np.linalg.qr(rows.T, mode='r')
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return r.T * signs


class GaussianParams:
    '''Mean vector and covariance of an n-dimensional Gaussian

    Parameters
    ----------
    mean : array_like, shape (n,)
    cov : array_like, shape (n, n)
        Symmetric positive definite
    chol : array_like, shape (n, n), optional
        Lower Cholesky factor of cov. Computed if omitted; otherwise trusted
        once check_factor accepts it.
    '''
    def __init__(self, mean, cov, chol=None):
        mean = _as_vector(mean, 'mean')
        cov = _checked_square(cov, n=len(mean))
        if chol is None:
            chol = check_covariance(cov)
        else:
            chol = check_factor(chol, cov)

        self._mean = _frozen(mean)
        self._cov = _frozen(cov)
        self._chol = _frozen(chol)

    @property
    def mean(self):
        '''Mean vector'''
        return self._mean

    @property
    def cov(self):
        '''Covariance matrix'''
        return self._cov

    @property
    def chol(self):
        '''Lower Cholesky factor of the covariance'''
        return self._chol

    @property
    def dim(self):
        return len(self._mean)

    @property
    def std(self):
        '''Marginal standard deviations'''
        return np.sqrt(np.diag(self._cov))

    def __repr__(self):
        return ('{0.__class__.__name__}(mean={0.mean!r}, cov={0.cov!r})'
                ''.format(self))


class AffineMap:
    '''The map y -> A y + b

    Parameters
    ----------
    A : array_like, shape (n, n)
        Invertible (absolute determinant above 1e-12)
    b : array_like, shape (n,)
    '''
    def __init__(self, A, b):
        A = np.array(A, dtype=np.float64)
        b = _as_vector(b, 'b')
        n = len(b)
        if A.shape != (n, n):
            raise InvalidInputError('A has shape {}, expected {}'
                                    ''.format(A.shape, (n, n)))
        if not np.all(np.isfinite(A)):
            raise InvalidInputError('A has non-finite entries')

        sign, logabsdet = np.linalg.slogdet(A)
        if sign == 0 or abs(np.linalg.det(A)) <= MIN_ABS_DET:
            raise InvalidInputError('A is not invertible (det={:g})'
                                    ''.format(np.linalg.det(A)))

        self._A = _frozen(A)
        self._b = _frozen(b)
        self._logabsdet = float(logabsdet)

    @classmethod
    def rating_scale(cls, n=5):
        '''A = 2I, b = (3, ..., 3): maps [-1, 1] onto the 1..5 rating scale'''
        return cls(2.0 * np.eye(n), np.full(n, 3.0))

    @classmethod
    def identity(cls, n=5):
        return cls(np.eye(n), np.zeros(n))

    @property
    def A(self):
        return self._A

    @property
    def b(self):
        return self._b

    @property
    def dim(self):
        return len(self._b)

    @property
    def logabsdet(self):
        '''ln |det A|'''
        return self._logabsdet

    def apply(self, y):
        '''A y + b for a vector or for the rows of a matrix'''
        return np.asarray(y, dtype=np.float64) @ self._A.T + self._b

    def to_latent(self, y):
        '''A^-1 (y - b) for a vector or for the rows of a matrix'''
        y = np.asarray(y, dtype=np.float64)
        return np.linalg.solve(self._A, (y - self._b).T).T

    def compose(self, inner):
        '''The map equal to applying ``inner`` first, then self'''
        return AffineMap(self._A @ inner.A, self._A @ inner.b + self._b)

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return (np.array_equal(self._A, other.A) and
                np.array_equal(self._b, other.b))

    def __hash__(self):
        return hash((self._A.tobytes(), self._b.tobytes()))

    def __repr__(self):
        return '{0.__class__.__name__}(A={0.A!r}, b={0.b!r})'.format(self)


def lower_factor(raw, n=None):
    '''Unpack raw triangle entries and apply the floored softplus to the
    diagonal only

    Returns
    -------
    factor : ndarray, shape (..., n, n)
    '''
    raw = np.asarray(raw, dtype=np.float64)
    factor = unpack_lower(raw, n=n)
    n = factor.shape[-1]
    idx = np.arange(n)
    factor[..., idx, idx] = np.maximum(softplus(factor[..., idx, idx]),
                                       DIAGONAL_FLOOR)
    return factor


def diagonal_factor(sd_raw):
    '''Diagonal factor whose i-th entry is the floored softplus of sd_raw[i]'''
    sd = np.maximum(softplus(sd_raw), DIAGONAL_FLOOR)
    return np.eye(sd.shape[-1]) * sd[..., np.newaxis, :]


def cholesky_transform(raw, n=None):
    '''Map unconstrained triangle entries to a covariance matrix

    The entries are unpacked row-major into a lower-triangular L, softplus
    is applied to the diagonal (floored at 1e-6) giving L~, and the result is
    L~ L~^T.

    Parameters
    ----------
    raw : array_like, shape (n(n+1)/2,)
    n : int, optional

    Returns
    -------
    cov : ndarray, shape (n, n)
    factor : ndarray, shape (n, n)
        The lower factor L~
    '''
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1:
        raise InvalidInputError('Raw triangle must be a vector (shape={})'
                                ''.format(raw.shape))
    if not np.all(np.isfinite(raw)):
        bad = int(np.flatnonzero(~np.isfinite(raw))[0])
        raise InvalidInputError('Raw triangle entry {} is not finite ({})'
                                ''.format(bad, raw[bad]))
    if n is None:
        n = dim_from_tri_size(len(raw))

    factor = lower_factor(raw, n=n)
    return symmetrize(factor @ factor.T), factor


def raw_from_covariance(cov):
    '''Packed raw triangle that cholesky_transform maps back onto cov'''
    factor = check_covariance(cov)
    idx = np.arange(factor.shape[0])
    factor[idx, idx] = softplus_inverse(factor[idx, idx])
    return pack_lower(factor)


def gaussian_from_raw(mean, raw):
    '''GaussianParams from a mean and raw triangle entries'''
    mean = _as_vector(mean, 'mean')
    cov, factor = cholesky_transform(raw, n=len(mean))
    return GaussianParams(mean, cov, factor)


def affine_transform(g, affine):
    '''Push a Gaussian through y -> A y + b: N(A mu + b, A Cov A^T)'''
    if g.dim != affine.dim:
        raise InvalidInputError('Gaussian has dimension {} but the affine map '
                                'has dimension {}'.format(g.dim, affine.dim))

    cov = symmetrize(affine.A @ g.cov @ affine.A.T)
    factor = factor_from_rows(affine.A @ g.chol)
    return GaussianParams(affine.apply(g.mean), cov, factor)


def log_density(g, y):
    '''ln N(y; mean, cov), including the (2 pi)^(n/2) normalization

    Parameters
    ----------
    g : GaussianParams
    y : array_like, shape (n,) or (m, n)

    Returns
    -------
    float or ndarray of shape (m,)
    '''
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1:] != (g.dim, ) or y.ndim > 2:
        raise InvalidInputError('Point shape {} does not match dimension {}'
                                ''.format(y.shape, g.dim))

    resid = (y - g.mean).T
    z = linalg.solve_triangular(g.chol, resid, lower=True)
    half_logdet = np.sum(np.log(np.diag(g.chol)))
    quad = np.sum(z * z, axis=0)
    return -0.5 * quad - half_logdet - 0.5 * g.dim * LOG_2PI


def _check_index(i, n):
    if not (0 <= i < n):
        raise InvalidInputError('Index {} out of range for dimension {}'
                                ''.format(i, n))


def marginalize(g, dims):
    '''Gaussian over the coordinates ``dims`` (strictly increasing indices)'''
    dims = [int(d) for d in dims]
    if not dims:
        raise InvalidInputError('No dimensions to marginalize onto')
    for d in dims:
        _check_index(d, g.dim)
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise InvalidInputError('Dimensions must be strictly increasing: {}'
                                ''.format(dims))

    return GaussianParams(g.mean[dims], g.cov[np.ix_(dims, dims)],
                          factor_from_rows(g.chol[dims]))


def correlation(cov, i, j):
    '''Correlation coefficient cov[i, j] / sqrt(cov[i, i] cov[j, j])

    Parameters
    ----------
    cov : array_like or GaussianParams
    i, j : int
    '''
    if isinstance(cov, GaussianParams):
        cov = cov.cov
    cov = np.asarray(cov, dtype=np.float64)
    n = cov.shape[0]
    _check_index(i, n)
    _check_index(j, n)
    if i == j:
        return 1.0

    rho = cov[i, j] / np.sqrt(cov[i, i] * cov[j, j])
    return float(np.clip(rho, -1.0, 1.0))


def correlation_matrix(cov):
    '''Full correlation matrix of a covariance matrix (or stack thereof)'''
    cov = np.asarray(cov, dtype=np.float64)
    sd = np.sqrt(np.diagonal(cov, axis1=-2, axis2=-1))
    corr = np.clip(cov / (sd[..., :, np.newaxis] * sd[..., np.newaxis, :]),
                   -1.0, 1.0)
    idx = np.arange(cov.shape[-1])
    corr[..., idx, idx] = 1.0
    return corr


def sample(g, count, seed):
    '''Draw ``count`` samples mean + L~ z with z standard normal

    Returns
    -------
    samples : ndarray, shape (count, n)
    '''
    count = int(count)
    if count < 1:
        raise InvalidInputError('Sample count must be positive (count={})'
                                ''.format(count))

    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) \
            or seed < 0:
        raise InvalidInputError('Sample seed must be a non-negative integer '
                                '(seed={!r})'.format(seed))

    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, g.dim))
    return g.mean + z @ g.chol.T
