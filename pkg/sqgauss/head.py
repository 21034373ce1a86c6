'''Dense prediction head and maximum-likelihood inference

The head maps a fixed-length feature vector to the raw parameterization of
a Gaussian over the quality dimensions. ``predict`` turns raw outputs into
a label-scale GaussianParams whose mean is the point estimate.
'''
import dataclasses
import logging

import numpy as np

from . import gaussian
from .errors import InvalidConfigError, InvalidInputError
from .gaussian import AffineMap, GaussianParams
from .losses import VARIANTS, raw_output_dim


logger = logging.getLogger(__name__)

DEFAULT_HIDDEN_DIMS = (256, 64)


@dataclasses.dataclass(frozen=True)
class HeadConfig:
    '''Architecture of the prediction head

    Parameters
    ----------
    input_dim : int
        Feature vector length
    hidden_dims : tuple of int, optional
        Widths of the ReLU hidden layers
    variant : {'full', 'independent', 'mse'}, optional
    dropout_rate : float, optional
        Dropout probability on hidden activations during training
    seed : int, optional
        Initialization seed
    n_dims : int, optional
        Number of quality dimensions
    '''
    input_dim: int
    hidden_dims: tuple = DEFAULT_HIDDEN_DIMS
    variant: str = 'full'
    dropout_rate: float = 0.0
    seed: int = 0
    n_dims: int = 5

    def __post_init__(self):
        object.__setattr__(self, 'hidden_dims',
                           tuple(int(h) for h in self.hidden_dims))
        for name, kind in (('input_dim', int), ('n_dims', int),
                           ('seed', int), ('dropout_rate', float)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if self.variant not in VARIANTS:
            raise InvalidConfigError('Unknown variant {!r} (expected one of '
                                     '{})'.format(self.variant,
                                                  ', '.join(VARIANTS)))
        if not self.hidden_dims:
            raise InvalidConfigError('hidden_dims must not be empty')
        dims = (self.input_dim, ) + self.hidden_dims + (self.n_dims, )
        if any(d < 1 for d in dims):
            raise InvalidConfigError('Zero-dimension layer in {}'
                                     ''.format(self.layer_dims))
        if not (0.0 <= self.dropout_rate < 1.0):
            raise InvalidConfigError('dropout_rate must be in [0, 1) (got {})'
                                     ''.format(self.dropout_rate))
        if self.seed < 0:
            raise InvalidConfigError('seed must be non-negative (got {})'
                                     ''.format(self.seed))

    @property
    def output_dim(self):
        '''Raw output length: 20 / 10 / 5 for full / independent / mse'''
        return raw_output_dim(self.variant, self.n_dims)

    @property
    def layer_dims(self):
        return (self.input_dim, ) + self.hidden_dims + (self.output_dim, )


class HeadModel:
    '''Layer weights and biases of a dense head

    Parameters
    ----------
    config : HeadConfig
    weights : list of ndarray
        Layer k has shape (layer_dims[k + 1], layer_dims[k])
    biases : list of ndarray
    affine : AffineMap, optional
        Output map applied at inference; defaults to the 2I, 3 map
    '''
    def __init__(self, config, weights, biases, affine=None):
        if affine is None:
            affine = AffineMap.rating_scale(config.n_dims)

        dims = config.layer_dims
        if len(weights) != len(dims) - 1 or len(biases) != len(weights):
            raise InvalidInputError('Expected {} layers, got {} weights and {} '
                                    'biases'.format(len(dims) - 1,
                                                    len(weights), len(biases)))

        self.config = config
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.affine = affine

        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k + 1], dims[k]) or b.shape != (dims[k + 1], ):
                raise InvalidInputError('Layer {} has shapes {} / {}, expected '
                                        '{} / {}'.format(k, w.shape, b.shape,
                                                         (dims[k + 1], dims[k]),
                                                         (dims[k + 1], )))
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError('Layer {} has non-finite parameters'
                                        ''.format(k))

    @property
    def num_layers(self):
        return len(self.weights)

    @property
    def params(self):
        '''Parameter arrays keyed by block name (W0, b0, W1, ...), shared
        with the model'''
        params = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            params['W{}'.format(k)] = w
            params['b{}'.format(k)] = b
        return params

    def copy(self):
        return HeadModel(self.config, self.weights, self.biases,
                         affine=self.affine)

    def __eq__(self, other):
        if not isinstance(other, HeadModel):
            return NotImplemented
        return (self.config == other.config and
                self.affine == other.affine and
                all(np.array_equal(a, b)
                    for a, b in zip(self.weights, other.weights)) and
                all(np.array_equal(a, b)
                    for a, b in zip(self.biases, other.biases)))

    def __repr__(self):
        return '{0.__class__.__name__}(config={0.config!r})'.format(self)


def init_head(config):
    '''Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases'''
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims

    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))

    logger.debug('Initialized %s head with layers %s (seed=%d)',
                 config.variant, dims, config.seed)
    return HeadModel(config, weights, biases)


def relu(x):
    return np.maximum(x, 0.0)


def _check_features(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (model.config.input_dim, ) or x.ndim > 2:
        raise InvalidInputError('Feature shape {} does not match input_dim={}'
                                ''.format(x.shape, model.config.input_dim))
    return x


def forward_cached(model, x, training=False, dropout_seed=None):
    '''Forward pass that also returns what ``backward`` needs

    Returns
    -------
    raw : ndarray, shape (B, output_dim)
    cache : list
        Per hidden layer: (layer input, pre-activation, dropout mask or None)
        followed by the final layer input
    '''
    x = np.atleast_2d(_check_features(model, x))
    rate = model.config.dropout_rate
    rng = None
    if training and rate > 0:
        if isinstance(dropout_seed, bool) or \
                not isinstance(dropout_seed, (int, np.integer)) or \
                dropout_seed < 0:
            raise InvalidInputError('Dropout needs a non-negative integer '
                                    'dropout_seed (got {!r})'
                                    ''.format(dropout_seed))
        rng = np.random.default_rng(dropout_seed)

    cache = []
    h = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = h @ w.T + b
        a = relu(z)
        mask = None
        if rng is not None:
            mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
            a = a * mask
        cache.append((h, z, mask))
        h = a

    cache.append(h)
    raw = h @ model.weights[-1].T + model.biases[-1]
    return raw, cache


def forward(model, x, training=False, dropout_seed=None):
    '''Raw head output for one feature vector (or the rows of a matrix)

    Hidden layers are affine + ReLU (+ inverted dropout when training), the
    output layer is affine only.
    '''
    x = _check_features(model, x)
    raw, _ = forward_cached(model, x, training=training,
                            dropout_seed=dropout_seed)
    return raw[0] if x.ndim == 1 else raw


def backward(model, cache, d_raw):
    '''Parameter gradients given the gradient of the summed loss with respect
    to the raw outputs

    Returns
    -------
    grads : dict
        Keyed like ``HeadModel.params``
    '''
    grads = {}
    last = model.num_layers - 1
    h = cache[-1]
    grads['W{}'.format(last)] = d_raw.T @ h
    grads['b{}'.format(last)] = d_raw.sum(axis=0)

    d_h = d_raw @ model.weights[last]
    for k in reversed(range(last)):
        h_in, z, mask = cache[k]
        if mask is not None:
            d_h = d_h * mask
        d_z = d_h * (z > 0)
        grads['W{}'.format(k)] = d_z.T @ h_in
        grads['b{}'.format(k)] = d_z.sum(axis=0)
        d_h = d_z @ model.weights[k]
    return grads


class Prediction:
    '''Label-scale predictive distribution and its point estimate

    Attributes
    ----------
    gaussian : GaussianParams
    point : ndarray
        The maximum-likelihood point estimate, identical to gaussian.mean
    variant : str
    '''
    def __init__(self, gaussian, variant):
        self.gaussian = gaussian
        self.point = gaussian.mean
        self.variant = variant

    @property
    def probabilistic(self):
        '''False for the mse variant, whose covariance is a placeholder'''
        return self.variant != 'mse'

    def __repr__(self):
        return ('{0.__class__.__name__}(variant={0.variant!r}, '
                'point={0.point!r})'.format(self))


def prediction_from_raw(raw, variant, affine):
    '''Build a Prediction from one raw head output vector'''
    raw = np.asarray(raw, dtype=np.float64)
    n = affine.dim
    if raw.shape != (raw_output_dim(variant, n), ):
        raise InvalidInputError('Variant {!r} expects {} raw values, got shape '
                                '{}'.format(variant, raw_output_dim(variant, n),
                                            raw.shape))

    mean = raw[:n]
    if variant == 'full':
        latent = gaussian.gaussian_from_raw(mean, raw[n:])
    elif variant == 'independent':
        factor = gaussian.diagonal_factor(raw[n:])
        latent = GaussianParams(mean, factor @ factor.T, factor)
    else:
        return Prediction(GaussianParams(affine.apply(mean), np.eye(n)),
                          variant)
    return Prediction(gaussian.affine_transform(latent, affine), variant)


def predict(model, x, affine=None):
    '''Predictive distribution for one feature vector

    Parameters
    ----------
    model : HeadModel
    x : array_like, shape (input_dim,)
    affine : AffineMap, optional
        Defaults to the model's own output map

    Returns
    -------
    Prediction
    '''
    if affine is None:
        affine = model.affine
    raw = forward(model, x, training=False)
    if raw.ndim != 1:
        raise InvalidInputError('predict takes a single feature vector; use '
                                'predict_batch for matrices')
    return prediction_from_raw(raw, model.config.variant, affine)


def predict_batch(model, features, affine=None):
    '''Predictions for the rows of a feature matrix'''
    if affine is None:
        affine = model.affine
    raw = np.atleast_2d(forward(model, features, training=False))
    return [prediction_from_raw(r, model.config.variant, affine) for r in raw]


def predict_points(model, features, affine=None):
    '''Point estimates (label-scale means) for the rows of a feature matrix'''
    if affine is None:
        affine = model.affine
    raw = np.atleast_2d(forward(model, features, training=False))
    return affine.apply(raw[:, :affine.dim])


def predict_moments(model, features, affine=None):
    '''Label-scale means and covariances for the rows of a feature matrix

    Returns
    -------
    means : ndarray, shape (B, n)
    covs : ndarray, shape (B, n, n)
        Identity matrices for the mse variant
    '''
    if affine is None:
        affine = model.affine
    raw = np.atleast_2d(forward(model, features, training=False))
    n = affine.dim
    variant = model.config.variant
    means = affine.apply(raw[:, :n])
    if variant == 'mse':
        return means, np.broadcast_to(np.eye(n), (len(raw), n, n)).copy()

    if variant == 'full':
        factor = gaussian.lower_factor(raw[:, n:], n=n)
    else:
        factor = gaussian.diagonal_factor(raw[:, n:])
    factor = affine.A @ factor
    covs = factor @ np.swapaxes(factor, -1, -2)
    return means, 0.5 * (covs + np.swapaxes(covs, -1, -2))
