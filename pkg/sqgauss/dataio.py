'''Datasets of precomputed feature vectors with five quality labels

Text format (UTF-8, comma-separated, LF line endings, no quoting)::

    feat_0,...,feat_{D-1},mos,noi,col,dis,loud
    0.5,-0.25,3.0,4.0,2.5,3.5,3.0
    ...

Values are written with 17 significant digits so that a write/load cycle
reproduces every float bit-exactly. Files ending in ``.h5``/``.hdf5`` are
HDF5 feature stores (see ``sqgauss.handlers``).

The synthetic generator draws x ~ U(-1, 1)^D and y ~ N(mu*(x), Cov*) with
mu*(x) = 3 + 1.5 tanh(W x), and records (W, Cov*) in a key-value sidecar::

    # comment
    feature_dim = D
    n_dims = 5
    sample_count = N
    seed = S
    weights = w_00 w_01 ... (row-major, n_dims x feature_dim)
    true_cov = c_00 c_01 ... (row-major, n_dims x n_dims)
'''
import collections
import dataclasses
import logging
import os
import re

import numpy as np
import pandas as pd

from . import gaussian
from .errors import (DatasetParseError, InvalidConfigError, InvalidInputError,
                     SchemaError)
from .handlers import FeatureStoreHDF5Handler, write_feature_store


logger = logging.getLogger(__name__)

LABEL_NAMES = ('mos', 'noi', 'col', 'dis', 'loud')
LABEL_RANGE = (1.0, 5.0)
HDF5_EXTENSIONS = ('.h5', '.hdf5')
TRUTH_FILENAME = 'ground_truth.txt'
FLOAT_FORMAT = '%.17g'

# Per-dimension noise standard deviations and single-factor loadings of the
# default synthetic noise covariance; the strongest pair is (MOS, NOI) with
# correlation 0.8 * 0.75 = 0.6.
DEFAULT_NOISE_STD = (0.5, 0.5, 0.45, 0.5, 0.4)
DEFAULT_LOADINGS = (0.8, 0.75, 0.5, 0.4, 0.3)

LabeledSample = collections.namedtuple('LabeledSample', 'features labels')
GroundTruth = collections.namedtuple('GroundTruth', 'weights true_cov')


def feature_names(dim):
    return ['feat_{}'.format(i) for i in range(dim)]


class Dataset:
    '''Immutable sequence of LabeledSample backed by two float64 arrays

    Parameters
    ----------
    features : array_like, shape (N, D)
    labels : array_like, shape (N, 5)
    '''
    def __init__(self, features, labels):
        features = np.array(features, dtype=np.float64)
        labels = np.array(labels, dtype=np.float64)
        if features.ndim != 2:
            raise InvalidInputError('Features must be 2D (shape={})'
                                    ''.format(features.shape))
        if labels.ndim != 2 or labels.shape[1] != len(LABEL_NAMES):
            raise InvalidInputError('Labels must have shape (N, {}) (got {})'
                                    ''.format(len(LABEL_NAMES), labels.shape))
        if len(features) != len(labels):
            raise InvalidInputError('{} feature rows but {} label rows'
                                    ''.format(len(features), len(labels)))
        if not (np.all(np.isfinite(features)) and
                np.all(np.isfinite(labels))):
            raise InvalidInputError('Dataset has non-finite entries')

        features.setflags(write=False)
        labels.setflags(write=False)
        self._features = features
        self._labels = labels

    @classmethod
    def from_samples(cls, samples, feature_dim=None):
        samples = list(samples)
        if not samples:
            return cls(np.zeros((0, feature_dim or 0)),
                       np.zeros((0, len(LABEL_NAMES))))
        return cls([s.features for s in samples], [s.labels for s in samples])

    @property
    def features(self):
        return self._features

    @property
    def labels(self):
        return self._labels

    @property
    def feature_dim(self):
        return self._features.shape[1]

    @property
    def out_of_range(self):
        '''Number of labels outside the 1..5 rating scale'''
        lo, hi = LABEL_RANGE
        return int(np.sum((self._labels < lo) | (self._labels > hi)))

    def __len__(self):
        return len(self._labels)

    def __iter__(self):
        for x, y in zip(self._features, self._labels):
            yield LabeledSample(x, y)

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return LabeledSample(self._features[idx], self._labels[idx])
        return Dataset(self._features[idx], self._labels[idx])

    def to_frame(self):
        columns = feature_names(self.feature_dim) + list(LABEL_NAMES)
        return pd.DataFrame(np.hstack([self._features, self._labels]),
                            columns=columns)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self._features, other.features) and
                np.array_equal(self._labels, other.labels))

    def __repr__(self):
        return ('{0.__class__.__name__}(samples={1}, feature_dim={0.feature_dim})'
                ''.format(self, len(self)))


def _is_hdf5(path):
    return os.path.splitext(str(path))[1].lower() in HDF5_EXTENSIONS


def _check_header(columns, path):
    columns = list(columns)
    n_labels = len(LABEL_NAMES)
    if len(columns) <= n_labels:
        raise SchemaError('{}: header has {} columns, need at least {}'
                          ''.format(path, len(columns), n_labels + 1))
    dim = len(columns) - n_labels
    expected = feature_names(dim) + list(LABEL_NAMES)
    if columns != expected:
        raise SchemaError('{}: unexpected header {} (expected {})'
                          ''.format(path, ','.join(columns),
                                    ','.join(expected)))
    return dim


def _parse_values(raw, path):
    '''Convert an object array of strings to float64, citing the first bad
    line'''
    for row, values in enumerate(raw):
        line = row + 2
        for col, value in enumerate(values):
            if not isinstance(value, str) or not value.strip():
                raise DatasetParseError('missing value in column {}'
                                        ''.format(col), path=path, line=line)
            try:
                number = float(value)
            except ValueError:
                raise DatasetParseError('cannot parse {!r} as a number'
                                        ''.format(value),
                                        path=path, line=line) from None
            if not np.isfinite(number):
                raise DatasetParseError('non-finite value {!r}'.format(value),
                                        path=path, line=line)
    return raw.astype(np.float64)


def _read_csv(path):
    try:
        df = pd.read_csv(path, dtype=str, na_filter=False, engine='c',
                         encoding='utf-8', skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise SchemaError('{}: empty dataset file'.format(path)) from None
    except pd.errors.ParserError as ex:
        match = re.search(r'line (\d+)', str(ex))
        line = int(match.group(1)) if match else None
        raise DatasetParseError('wrong number of fields ({})'.format(ex),
                                path=path, line=line) from None

    dim = _check_header(df.columns, path)
    values = _parse_values(df.to_numpy(dtype=object), path)
    return values[:, :dim], values[:, dim:]


def load_dataset(path, strict=False):
    '''Load a dataset file

    Parameters
    ----------
    path : str
    strict : bool, optional
        Reject labels outside [1, 5] instead of counting them in a warning

    Returns
    -------
    Dataset
    '''
    if _is_hdf5(path):
        with FeatureStoreHDF5Handler(path) as handler:
            features, labels = handler()
        if not (np.all(np.isfinite(features)) and
                np.all(np.isfinite(labels))):
            raise DatasetParseError('non-finite values in feature store',
                                    path=path)
    else:
        features, labels = _read_csv(path)

    if labels.shape[1] != len(LABEL_NAMES):
        raise SchemaError('{}: expected {} label columns, found {}'
                          ''.format(path, len(LABEL_NAMES), labels.shape[1]))

    data = Dataset(features, labels)
    lo, hi = LABEL_RANGE
    bad = (data.labels < lo) | (data.labels > hi)
    if np.any(bad):
        row, col = np.argwhere(bad)[0]
        if strict:
            raise DatasetParseError('label {}={!r} outside [{}, {}]'
                                    ''.format(LABEL_NAMES[col],
                                              data.labels[row, col], lo, hi),
                                    path=path, line=int(row) + 2)
        logger.warning('%s: %d labels outside [%g, %g] (first at line %d)',
                       path, int(np.sum(bad)), lo, hi, int(row) + 2)

    logger.info('Loaded %d samples (D=%d) from %s', len(data),
                data.feature_dim, path)
    return data


def write_dataset(path, data):
    '''Write a dataset in the format load_dataset reads'''
    if _is_hdf5(path):
        write_feature_store(path, data.features, data.labels)
    else:
        data.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT,
                               lineterminator='\n', encoding='utf-8')
    logger.debug('Wrote %d samples to %s', len(data), path)


def default_noise_cov(scale=1.0):
    '''Single-factor noise covariance with correlations up to 0.6'''
    std = scale * np.asarray(DEFAULT_NOISE_STD)
    loadings = np.asarray(DEFAULT_LOADINGS)
    corr = np.outer(loadings, loadings)
    np.fill_diagonal(corr, 1.0)
    return corr * np.outer(std, std)


@dataclasses.dataclass(frozen=True)
class SynthSpec:
    '''Ground truth of a synthetic dataset

    Parameters
    ----------
    feature_dim : int
    sample_count : int
    weights : ndarray, shape (5, feature_dim)
    true_cov : ndarray, shape (5, 5)
    seed : int
    '''
    feature_dim: int
    sample_count: int
    weights: np.ndarray
    true_cov: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.feature_dim < 1:
            raise InvalidConfigError('feature_dim must be >= 1 (got {})'
                                     ''.format(self.feature_dim))
        if self.sample_count < 1:
            raise InvalidConfigError('sample_count must be >= 1 (got {})'
                                     ''.format(self.sample_count))
        if self.seed < 0:
            raise InvalidConfigError('seed must be non-negative (got {})'
                                     ''.format(self.seed))
        n = len(LABEL_NAMES)
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (n, self.feature_dim):
            raise InvalidConfigError('weights have shape {}, expected {}'
                                     ''.format(weights.shape,
                                               (n, self.feature_dim)))
        true_cov = np.array(self.true_cov, dtype=np.float64)
        try:
            gaussian.check_covariance(true_cov, n=n)
        except InvalidInputError as ex:
            raise InvalidConfigError('Invalid synthetic covariance: {}'
                                     ''.format(ex)) from None
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'true_cov', true_cov)

    @classmethod
    def default(cls, feature_dim, sample_count, seed=0, weight_scale=1.0,
                noise_scale=1.0):
        '''W ~ N(0, weight_scale^2 / D) drawn from the seed, default noise'''
        rng = np.random.default_rng([seed, 0])
        weights = rng.normal(0.0, weight_scale / np.sqrt(feature_dim),
                             size=(len(LABEL_NAMES), feature_dim))
        return cls(feature_dim, sample_count, weights,
                   default_noise_cov(noise_scale), seed)


def mean_map(weights, features):
    '''mu*(x) = 3 + 1.5 tanh(W x) for the rows of ``features``'''
    return 3.0 + 1.5 * np.tanh(np.asarray(features) @ np.asarray(weights).T)


def generate_synthetic(spec):
    '''Draw a synthetic dataset

    Returns
    -------
    data : Dataset
    truth : GroundTruth
    '''
    rng = np.random.default_rng([spec.seed, 1])
    features = rng.uniform(-1.0, 1.0, size=(spec.sample_count,
                                            spec.feature_dim))
    noise_dist = gaussian.GaussianParams(np.zeros(len(LABEL_NAMES)),
                                         spec.true_cov)
    noise = gaussian.sample(noise_dist, spec.sample_count,
                            seed=int(rng.integers(0, 2 ** 63 - 1)))
    labels = mean_map(spec.weights, features) + noise

    logger.info('Generated %d synthetic samples (D=%d, seed=%d)',
                spec.sample_count, spec.feature_dim, spec.seed)
    return Dataset(features, labels), GroundTruth(spec.weights, spec.true_cov)


def _format_floats(values):
    return ' '.join(FLOAT_FORMAT % v for v in np.ravel(values))


def write_ground_truth(path, spec):
    '''Write the key-value ground-truth sidecar of a synthetic dataset'''
    lines = ['# sqgauss synthetic ground truth',
             '# mu*(x) = 3 + 1.5 tanh(W x); labels ~ N(mu*(x), true_cov)',
             'feature_dim = {}'.format(spec.feature_dim),
             'n_dims = {}'.format(len(LABEL_NAMES)),
             'sample_count = {}'.format(spec.sample_count),
             'seed = {}'.format(spec.seed),
             'weights = {}'.format(_format_floats(spec.weights)),
             'true_cov = {}'.format(_format_floats(spec.true_cov)),
             ]
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')


def read_ground_truth(path):
    '''Read a ground-truth sidecar

    Returns
    -------
    GroundTruth
    '''
    entries = {}
    with open(path, encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise DatasetParseError('expected key = value', path=path,
                                        line=lineno)
            entries[key.strip()] = value.strip()

    try:
        dim = int(entries['feature_dim'])
        n = int(entries['n_dims'])
        weights = np.array(entries['weights'].split(), dtype=np.float64)
        true_cov = np.array(entries['true_cov'].split(), dtype=np.float64)
        return GroundTruth(weights.reshape(n, dim), true_cov.reshape(n, n))
    except (KeyError, ValueError) as ex:
        raise SchemaError('{}: invalid ground-truth file ({})'
                          ''.format(path, ex)) from None


def split(data, fraction, seed):
    '''Seeded shuffle, then the first round(fraction * N) samples go to the
    training side

    Returns
    -------
    train, holdout : Dataset
    '''
    if len(data) < 2:
        raise InvalidInputError('Need at least 2 samples to split (got {})'
                                ''.format(len(data)))
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) \
            or seed < 0:
        raise InvalidInputError('Split seed must be a non-negative integer '
                                '(seed={!r})'.format(seed))
    if not (0.0 < fraction < 1.0):
        raise InvalidInputError('Split fraction must be in (0, 1) (got {})'
                                ''.format(fraction))

    n_train = int(round(fraction * len(data)))
    if n_train in (0, len(data)):
        raise InvalidInputError('Split fraction {} of {} samples leaves one '
                                'side empty'.format(fraction, len(data)))

    order = np.random.default_rng(seed).permutation(len(data))
    return data[order[:n_train]], data[order[n_train:]]
