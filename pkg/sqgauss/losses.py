'''Training losses and their analytic gradients

Three heads share one layout convention: the first n raw outputs are the
(pre-affine) mean, the remainder parameterize the covariance.

* ``full``: n(n+1)/2 triangle entries, row-major, softplus on the diagonal
* ``independent``: n per-dimension standard deviations through softplus
* ``mse``: no covariance outputs

The GNLL excludes the constant (n/2) ln 2 pi; ``gaussian.log_density``
includes it, so ``-log_density == gnll_loss + (n/2) ln 2 pi``.

With Cov^ = A Cov A^T and r = y - (A m + b), the quadratic form equals
|L~^-1 s|^2 for s = A^-1 (y - b) - m, and ln|Cov^| = 2 ln|det A| +
2 sum ln diag L~. The batched routines below use that identity so that each
sample costs two small triangular solves.
'''
import collections

import numpy as np
from scipy import linalg

from . import gaussian
from .errors import InvalidInputError, NumericFailureError
from .linalg import (pack_lower, softplus, softplus_grad, solve_lower,
                     solve_lower_transpose, tri_size, unpack_lower)


VARIANTS = ('full', 'independent', 'mse')

RawGradient = collections.namedtuple('RawGradient', 'd_mean d_tri')


def raw_output_dim(variant, n=5):
    '''Length of the raw head output for a variant (20/10/5 for n=5)'''
    if variant == 'full':
        return n + tri_size(n)
    elif variant == 'independent':
        return 2 * n
    elif variant == 'mse':
        return n
    raise InvalidInputError('Unknown variant {!r} (expected one of {})'
                            ''.format(variant, ', '.join(VARIANTS)))


def _check_same_length(a, b, names):
    if np.shape(a)[-1] != np.shape(b)[-1]:
        raise InvalidInputError('{} has length {} but {} has length {}'
                                ''.format(names[0], np.shape(a)[-1],
                                          names[1], np.shape(b)[-1]))


def _check_finite(array, name, **context):
    array = np.asarray(array)
    if np.all(np.isfinite(array)):
        return

    flat = np.flatnonzero(~np.isfinite(array.reshape(-1, array.shape[-1])))
    entry = int(flat[0] % array.shape[-1])
    raise NumericFailureError('Non-finite value in {}'.format(name),
                              block='{}[{}]'.format(name, entry), **context)


def gnll_loss(g, y):
    '''0.5 [ln|Cov| + (y - mean)^T Cov^-1 (y - mean)]

    Parameters
    ----------
    g : GaussianParams
    y : array_like, shape (n,)
    '''
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(g.mean, y, ('mean', 'y'))

    z = linalg.solve_triangular(g.chol, y - g.mean, lower=True)
    return float(np.sum(np.log(np.diag(g.chol))) + 0.5 * (z @ z))


def gnll_grad_mean(g, y):
    '''Gradient of gnll_loss with respect to the mean: -Cov^-1 (y - mean)'''
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(g.mean, y, ('mean', 'y'))

    z = linalg.solve_triangular(g.chol, y - g.mean, lower=True)
    return -linalg.solve_triangular(g.chol, z, lower=True, trans='T')


def mse_loss(mean_pred, y):
    '''(1/n) sum (y_i - mean_i)^2'''
    mean_pred = np.asarray(mean_pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(mean_pred, y, ('prediction', 'y'))
    return float(np.mean((y - mean_pred) ** 2))


def mse_grad(mean_pred, y):
    '''Gradient of mse_loss with respect to the prediction'''
    mean_pred = np.asarray(mean_pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(mean_pred, y, ('prediction', 'y'))
    return -2.0 / len(y) * (y - mean_pred)


def full_gnll_batch(mean_raw, tri_raw, y, affine):
    '''GNLL and raw gradients for full-covariance heads

    Parameters
    ----------
    mean_raw : ndarray, shape (B, n)
    tri_raw : ndarray, shape (B, n(n+1)/2)
    y : ndarray, shape (B, n)
    affine : AffineMap

    Returns
    -------
    loss : ndarray, shape (B,)
    d_mean : ndarray, shape (B, n)
    d_tri : ndarray, shape (B, n(n+1)/2)
    '''
    n = affine.dim
    factor = unpack_lower(tri_raw, n=n)
    idx = np.arange(n)
    diag_raw = factor[..., idx, idx]
    diag_sp = softplus(diag_raw)
    floored = diag_sp < gaussian.DIAGONAL_FLOOR
    diag = np.where(floored, gaussian.DIAGONAL_FLOOR, diag_sp)
    factor[..., idx, idx] = diag

    s = affine.to_latent(y) - mean_raw
    z = solve_lower(factor, s)
    loss = (affine.logabsdet + np.sum(np.log(diag), axis=-1) +
            0.5 * np.sum(z * z, axis=-1))

    w = solve_lower_transpose(factor, z)
    d_factor = np.tril(-w[..., :, np.newaxis] * z[..., np.newaxis, :])
    d_factor[..., idx, idx] += 1.0 / diag
    d_factor[..., idx, idx] *= np.where(floored, 0.0, softplus_grad(diag_raw))
    return loss, -w, pack_lower(d_factor)


def diag_gnll_batch(mean_raw, sd_raw, y, affine):
    '''GNLL and raw gradients for independent (diagonal) heads

    Returns
    -------
    loss : ndarray, shape (B,)
    d_mean : ndarray, shape (B, n)
    d_sd : ndarray, shape (B, n)
    '''
    sd_sp = softplus(sd_raw)
    floored = sd_sp < gaussian.DIAGONAL_FLOOR
    sd = np.where(floored, gaussian.DIAGONAL_FLOOR, sd_sp)

    s = affine.to_latent(y) - mean_raw
    z = s / sd
    loss = (affine.logabsdet + np.sum(np.log(sd), axis=-1) +
            0.5 * np.sum(z * z, axis=-1))

    d_mean = -z / sd
    d_sd = (1.0 - z * z) / sd
    d_sd *= np.where(floored, 0.0, softplus_grad(sd_raw))
    return loss, d_mean, d_sd


def mse_batch(mean_raw, y, affine):
    '''MSE on the label scale and its gradient with respect to the raw mean'''
    resid = y - affine.apply(mean_raw)
    n = affine.dim
    loss = np.mean(resid * resid, axis=-1)
    d_mean = (-2.0 / n * resid) @ affine.A
    return loss, d_mean


def batch_loss_and_grad(variant, raw, y, affine):
    '''Per-sample loss and gradient with respect to the raw head output

    Parameters
    ----------
    variant : {'full', 'independent', 'mse'}
    raw : ndarray, shape (B, raw_output_dim(variant))
    y : ndarray, shape (B, n)
    affine : AffineMap

    Returns
    -------
    loss : ndarray, shape (B,)
    d_raw : ndarray, shape (B, raw_output_dim(variant))
    '''
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    n = affine.dim
    expected = raw_output_dim(variant, n)
    if raw.shape[-1] != expected:
        raise InvalidInputError('Variant {!r} expects {} raw values, got {}'
                                ''.format(variant, expected, raw.shape[-1]))
    _check_same_length(y, affine.b, ('y', 'affine map'))

    mean_raw, rest = raw[:, :n], raw[:, n:]
    if variant == 'full':
        loss, d_mean, d_rest = full_gnll_batch(mean_raw, rest, y, affine)
        d_raw = np.concatenate([d_mean, d_rest], axis=-1)
    elif variant == 'independent':
        loss, d_mean, d_rest = diag_gnll_batch(mean_raw, rest, y, affine)
        d_raw = np.concatenate([d_mean, d_rest], axis=-1)
    else:
        loss, d_raw = mse_batch(mean_raw, y, affine)
    return loss, d_raw


def gnll_grad_raw(raw, y, affine):
    '''Gradient of gnll_loss(affine_transform(cholesky_transform(raw)), y)

    Parameters
    ----------
    raw : array_like, shape (n + n(n+1)/2,)
        Mean entries followed by the packed triangle
    y : array_like, shape (n,)
    affine : AffineMap

    Returns
    -------
    RawGradient
    '''
    raw = np.asarray(raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = affine.dim
    if raw.shape != (raw_output_dim('full', n), ):
        raise InvalidInputError('Expected {} raw values for n={}, got shape {}'
                                ''.format(raw_output_dim('full', n), n,
                                          raw.shape))
    _check_same_length(y, affine.b, ('y', 'affine map'))

    _, d_mean, d_tri = full_gnll_batch(raw[np.newaxis, :n],
                                       raw[np.newaxis, n:],
                                       y[np.newaxis], affine)
    _check_finite(d_mean, 'd_mean')
    _check_finite(d_tri, 'd_tri')
    return RawGradient(d_mean[0], d_tri[0])


def diag_gnll_loss(means, sd_raw, y, affine):
    '''GNLL for a diagonal covariance whose i-th (pre-affine) standard
    deviation is softplus(sd_raw[i])

    Parameters
    ----------
    means : array_like, shape (n,)
        Pre-affine mean
    sd_raw : array_like, shape (n,)
    y : array_like, shape (n,)
    affine : AffineMap
    '''
    means = np.asarray(means, dtype=np.float64)
    sd_raw = np.asarray(sd_raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(means, sd_raw, ('means', 'sd_raw'))
    _check_same_length(means, y, ('means', 'y'))
    _check_same_length(means, affine.b, ('means', 'affine map'))

    loss, _, _ = diag_gnll_batch(means[np.newaxis], sd_raw[np.newaxis],
                                 y[np.newaxis], affine)
    return float(loss[0])


def diag_gnll_grad_raw(means, sd_raw, y, affine):
    '''Gradient of diag_gnll_loss with respect to (means, sd_raw)'''
    means = np.asarray(means, dtype=np.float64)
    sd_raw = np.asarray(sd_raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(means, sd_raw, ('means', 'sd_raw'))
    _check_same_length(means, y, ('means', 'y'))

    _, d_mean, d_sd = diag_gnll_batch(means[np.newaxis], sd_raw[np.newaxis],
                                      y[np.newaxis], affine)
    _check_finite(d_mean, 'd_mean')
    _check_finite(d_sd, 'd_sd')
    return RawGradient(d_mean[0], d_sd[0])


def mse_grad_raw(means, y, affine):
    '''Gradient of the label-scale MSE with respect to the pre-affine mean'''
    means = np.asarray(means, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(means, y, ('means', 'y'))

    _, d_mean = mse_batch(means[np.newaxis], y[np.newaxis], affine)
    _check_finite(d_mean, 'd_mean')
    return d_mean[0]
