'''HDF5 feature-store access

A feature store holds two datasets at the file root:

* ``features``: (N, D) float64
* ``labels``: (N, 5) float64, columns MOS, NOI, COL, DIS, LOUD
'''
import logging

import h5py
import numpy as np

from .errors import SchemaError


logger = logging.getLogger(__name__)

FEATURES_KEY = 'features'
LABELS_KEY = 'labels'


class FeatureStoreHDF5Handler:
    '''Read features and labels from an HDF5 feature store

    Parameters
    ----------
    filename : str or h5py.File
    features_key : str, optional
    labels_key : str, optional
    '''
    def __init__(self, filename, *, features_key=FEATURES_KEY,
                 labels_key=LABELS_KEY):
        if isinstance(filename, h5py.File):
            self._file = filename
            self._filename = self._file.filename
        else:
            self._filename = filename
            self._file = None
        self._features_key = features_key
        self._labels_key = labels_key

        self.open()

    def open(self):
        if self._file:
            return

        self._file = h5py.File(self._filename, 'r')

    def close(self):
        if self._file is not None:
            self._file.close()
        self._file = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read(self, key):
        try:
            dataset = self._file[key]
        except KeyError:
            raise SchemaError('{}: no {!r} dataset in feature store'
                              ''.format(self._filename, key)) from None
        return np.asarray(dataset, dtype=np.float64)

    def __call__(self):
        '''Return (features, labels) as float64 arrays'''
        features = self._read(self._features_key)
        labels = self._read(self._labels_key)
        if features.ndim != 2 or labels.ndim != 2:
            raise SchemaError('{}: features and labels must be 2D (shapes {} '
                              'and {})'.format(self._filename, features.shape,
                                               labels.shape))
        if len(features) != len(labels):
            raise SchemaError('{}: {} feature rows but {} label rows'
                              ''.format(self._filename, len(features),
                                        len(labels)))
        logger.debug('Read %d samples of dimension %d from %s',
                     len(features), features.shape[1], self._filename)
        return features, labels

    def __repr__(self):
        return '{0.__class__.__name__}(filename={0._filename!r})'.format(self)


def write_feature_store(path, features, labels):
    '''Write a feature store with the layout read by FeatureStoreHDF5Handler'''
    with h5py.File(path, 'w') as f:
        f.create_dataset(FEATURES_KEY, data=np.asarray(features,
                                                       dtype=np.float64))
        f.create_dataset(LABELS_KEY, data=np.asarray(labels,
                                                     dtype=np.float64))
