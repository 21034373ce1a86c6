'''Diagnostic tables: marginal density grids, correlation scatter and
per-sample predictive uncertainty

Tables are pandas DataFrames written with the dataset text conventions
(comma-separated, header row, LF, 17 significant digits).
'''
import itertools
import logging

import numpy as np
import pandas as pd

from . import gaussian
from .dataio import FLOAT_FORMAT, LABEL_NAMES
from .errors import InvalidInputError
from .head import predict_moments


logger = logging.getLogger(__name__)

GRID_SIGMAS = 6.0
DEFAULT_RESOLUTION = 101


def parse_dim_pair(text):
    '''``'mos,noi'`` -> (0, 1)'''
    names = [name.strip().lower() for name in str(text).split(',')]
    if len(names) != 2:
        raise InvalidInputError('Expected two comma-separated dimensions, got '
                                '{!r}'.format(text))
    try:
        pair = tuple(LABEL_NAMES.index(name) for name in names)
    except ValueError:
        raise InvalidInputError('Unknown dimension in {!r} (expected names '
                                'from {})'.format(text, ', '.join(LABEL_NAMES))
                                ) from None
    if pair[0] == pair[1]:
        raise InvalidInputError('Dimension pair {!r} repeats a dimension'
                                ''.format(text))
    return pair


def _resolution(resolution):
    if np.ndim(resolution) == 0:
        resolution = (resolution, resolution)
    nx, ny = (int(r) for r in resolution)
    if nx < 2 or ny < 2:
        raise InvalidInputError('Grid resolution must be >= 2 per axis (got '
                                '{})'.format((nx, ny)))
    return nx, ny


def emit_marginal_grid(g, dims=(0, 1), bounds=None,
                       resolution=DEFAULT_RESOLUTION):
    '''Evaluate the marginal density over a pair of dimensions on a grid

    Parameters
    ----------
    g : GaussianParams
    dims : pair of int
    bounds : ((lo1, hi1), (lo2, hi2)), optional
        Defaults to the marginal mean +- 6 standard deviations
    resolution : int or pair of int, optional
        Grid points per axis

    Returns
    -------
    pandas.DataFrame
        Columns v1, v2, density; v1 varies slowest
    '''
    i, j = (int(d) for d in dims)
    if i == j:
        raise InvalidInputError('Dimension pair repeats {}'.format(i))
    nx, ny = _resolution(resolution)

    order = sorted((i, j))
    marginal = gaussian.marginalize(g, order)
    if order != [i, j]:
        marginal = gaussian.GaussianParams(
            marginal.mean[::-1], marginal.cov[::-1, ::-1],
            gaussian.factor_from_rows(marginal.chol[::-1]))

    if bounds is None:
        bounds = [(m - GRID_SIGMAS * s, m + GRID_SIGMAS * s)
                  for m, s in zip(marginal.mean, marginal.std)]
    (lo1, hi1), (lo2, hi2) = bounds
    if not (hi1 > lo1 and hi2 > lo2):
        raise InvalidInputError('Empty grid bounds {}'.format(bounds))

    grid_1 = np.linspace(lo1, hi1, nx)
    grid_2 = np.linspace(lo2, hi2, ny)
    mesh_1, mesh_2 = np.meshgrid(grid_1, grid_2, indexing='ij')
    points = np.column_stack([mesh_1.ravel(), mesh_2.ravel()])
    density = np.exp(gaussian.log_density(marginal, points))
    return pd.DataFrame({'v1': points[:, 0], 'v2': points[:, 1],
                         'density': density})


def emit_correlation_scatter(model, data, affine=None, dim_pair=(0, 1)):
    '''Labels of a dimension pair next to the predicted correlation

    Returns
    -------
    pandas.DataFrame
        One row per sample; columns are the two dimension names and
        predicted_corr
    '''
    i, j = (int(d) for d in dim_pair)
    if i == j or not (0 <= i < len(LABEL_NAMES) and 0 <= j < len(LABEL_NAMES)):
        raise InvalidInputError('Invalid dimension pair {}'.format((i, j)))
    if model.config.variant == 'mse':
        logger.warning('mse model has no predictive covariance; correlations '
                       'are reported as 0')

    _, covs = predict_moments(model, data.features, affine)
    corr = gaussian.correlation_matrix(covs)[:, i, j]
    return pd.DataFrame({LABEL_NAMES[i]: data.labels[:, i],
                         LABEL_NAMES[j]: data.labels[:, j],
                         'predicted_corr': corr},
                        columns=[LABEL_NAMES[i], LABEL_NAMES[j],
                                 'predicted_corr'])


def prediction_columns():
    pairs = itertools.combinations(LABEL_NAMES, 2)
    return (list(LABEL_NAMES) +
            ['std_{}'.format(name) for name in LABEL_NAMES] +
            ['corr_{}_{}'.format(a, b) for a, b in pairs])


def prediction_table(model, data, affine=None):
    '''Point estimate, predictive std and pairwise correlations per sample'''
    means, covs = predict_moments(model, data.features, affine)
    std = np.sqrt(np.diagonal(covs, axis1=-2, axis2=-1))
    corr = gaussian.correlation_matrix(covs)
    upper = [corr[:, a, b] for a, b in
             itertools.combinations(range(len(LABEL_NAMES)), 2)]
    values = np.column_stack([means, std] + upper)
    return pd.DataFrame(values, columns=prediction_columns())


def write_table(path, frame):
    '''Write a table as comma-separated text; missing values are empty'''
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT,
                 lineterminator='\n', na_rep='', encoding='utf-8')
    logger.debug('Wrote %d-row table to %s', len(frame), path)
