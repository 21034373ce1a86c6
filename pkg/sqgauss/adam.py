'''Adam optimizer with bias-corrected moment estimates'''
import logging

import numpy as np

from .errors import InvalidInputError, NumericFailureError


logger = logging.getLogger(__name__)


class AdamState:
    '''First/second moment estimates per parameter block and the step count'''
    def __init__(self):
        self.m = {}
        self.v = {}
        self.step = 0

    def __repr__(self):
        return ('{0.__class__.__name__}(step={0.step}, blocks={1})'
                ''.format(self, sorted(self.m)))


def adam_step(params, grads, state, config):
    '''Apply one Adam update in place

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
    theta <- theta - lr m^ / (sqrt(v^) + eps)

    with m^ = m / (1 - b1^t) and v^ = v / (1 - b2^t).

    Parameters
    ----------
    params : dict of ndarray
        Updated in place
    grads : dict of ndarray
        Same keys and shapes as params
    state : AdamState
    config
        Anything with ``learning_rate``, ``beta1``, ``beta2`` and ``epsilon``
        attributes (e.g. TrainConfig)

    Returns
    -------
    params, state
    '''
    if set(params) != set(grads):
        raise InvalidInputError('Gradient blocks {} do not match parameter '
                                'blocks {}'.format(sorted(grads),
                                                   sorted(params)))
    for key in sorted(params):
        g = grads[key]
        if np.shape(g) != params[key].shape:
            raise InvalidInputError('Gradient for {} has shape {}, expected {}'
                                    ''.format(key, np.shape(g),
                                              params[key].shape))
        if not np.all(np.isfinite(g)):
            raise NumericFailureError('Non-finite gradient', block=key)

    state.step += 1
    beta1, beta2 = config.beta1, config.beta2
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step

    for key in sorted(params):
        g = grads[key]
        if key not in state.m:
            state.m[key] = np.zeros_like(params[key])
            state.v[key] = np.zeros_like(params[key])

        m = state.m[key]
        v = state.v[key]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)

        m_hat = m / bc1
        v_hat = v / bc2
        params[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) +
                                                       config.epsilon)

    return params, state
