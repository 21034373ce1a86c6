'''Finite-difference gradient checking'''
import logging

import numpy as np


logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
RELATIVE_FLOOR = 1e-8


def central_difference(func, x, step=DEFAULT_STEP):
    '''Central-difference gradient of a scalar function

    Parameters
    ----------
    func : callable
        Maps an ndarray shaped like ``x`` to a float
    x : array_like
    step : float, optional

    Returns
    -------
    grad : ndarray, same shape as x
    '''
    x0 = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x0)

    x = x0.copy()
    for j in range(x0.size):
        x.flat[j] = x0.flat[j] + step
        f_plus = func(x)

        x.flat[j] = x0.flat[j] - step
        f_minus = func(x)

        x.flat[j] = x0.flat[j]
        grad.flat[j] = (f_plus - f_minus) / (2 * step)

    return grad


def relative_error(analytic, numeric, floor=RELATIVE_FLOOR):
    '''Elementwise |a - n| / max(|a|, |n|, floor)'''
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def check_gradient(func, grad, x, step=DEFAULT_STEP, atol=RELATIVE_FLOOR):
    '''Largest relative error between an analytic gradient and the
    central-difference estimate at ``x``

    Coordinates where both values are within ``atol`` of zero count as
    exact matches.

    Parameters
    ----------
    func : callable
        Scalar function
    grad : callable
        Analytic gradient of ``func``, returning an array shaped like ``x``
    x : array_like

    Returns
    -------
    max_error : float
    '''
    analytic = np.asarray(grad(np.array(x, dtype=np.float64)))
    numeric = central_difference(func, x, step=step)
    err = relative_error(analytic, numeric, floor=atol)
    err[np.maximum(np.abs(analytic), np.abs(numeric)) <= atol] = 0.0

    worst = int(np.argmax(err))
    logger.debug('Gradient check: max relative error %.3g at entry %d '
                 '(analytic=%g numeric=%g)', err.flat[worst], worst,
                 analytic.flat[worst], numeric.flat[worst])
    return float(err.flat[worst])
