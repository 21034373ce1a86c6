'''Evaluation metrics and report tables

Per-dimension RMSE and Pearson correlation of the point estimates, their
averages across the five quality dimensions, and the multi-run aggregation
(mean and sample standard deviation) used for seed batteries.
'''
import collections
import logging

import numpy as np
import pandas as pd
from scipy import stats

from .dataio import LABEL_NAMES
from .errors import (InvalidInputError, SchemaError,
                     UndefinedCorrelationError)
from .gaussian import LOG_2PI
from .head import predict_points
from .trainer import mean_loss


logger = logging.getLogger(__name__)

DimensionRecord = collections.namedtuple('DimensionRecord', 'name rmse pcc')


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if len(pred) != len(truth):
        raise InvalidInputError('Prediction has {} values but truth has {}'
                                ''.format(len(pred), len(truth)))
    if not len(pred):
        raise InvalidInputError('No values to compare')
    return pred, truth


def rmse(pred, truth):
    '''Root mean squared difference'''
    pred, truth = _paired(pred, truth)
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


def pcc(pred, truth):
    '''Pearson correlation coefficient

    Raises
    ------
    UndefinedCorrelationError
        If either input is constant
    '''
    pred, truth = _paired(pred, truth)
    if len(pred) < 2:
        raise InvalidInputError('Correlation needs at least 2 values (got {})'
                                ''.format(len(pred)))
    for name, values in (('prediction', pred), ('truth', truth)):
        if np.all(values == values[0]):
            raise UndefinedCorrelationError('Correlation undefined: {} is '
                                            'constant ({})'.format(name,
                                                                   values[0]))
    r, _ = stats.pearsonr(pred, truth)
    return float(np.clip(r, -1.0, 1.0))


class EvalReport:
    '''Per-dimension metrics of one model on one dataset

    Parameters
    ----------
    records : list of DimensionRecord
        One per quality dimension, in canonical order; pcc may be None
    sample_count : int
    variant : str
    mean_nll : float or None
        Mean negative log-density (including the 2 pi term); None for the
        mse variant
    '''
    def __init__(self, records, sample_count, variant, mean_nll=None):
        records = list(records)
        names = tuple(rec.name for rec in records)
        if names != LABEL_NAMES:
            raise InvalidInputError('Report dimensions {} are not {}'
                                    ''.format(names, LABEL_NAMES))
        self.records = records
        self.sample_count = int(sample_count)
        self.variant = variant
        self.mean_nll = mean_nll

    @property
    def probabilistic(self):
        return self.variant != 'mse'

    @property
    def mean_rmse(self):
        return float(np.mean([rec.rmse for rec in self.records]))

    @property
    def mean_pcc(self):
        '''Average PCC, or None if any dimension's PCC is undefined'''
        values = [rec.pcc for rec in self.records]
        if any(v is None for v in values):
            return None
        return float(np.mean(values))

    def to_frame(self):
        '''One row per dimension: dimension, rmse, pcc'''
        return pd.DataFrame([{'dimension': rec.name, 'rmse': rec.rmse,
                              'pcc': np.nan if rec.pcc is None else rec.pcc}
                             for rec in self.records],
                            columns=['dimension', 'rmse', 'pcc'])

    def as_row(self):
        '''Flat mapping in the per-model table layout'''
        row = collections.OrderedDict()
        for rec in self.records:
            row['{}_rmse'.format(rec.name)] = rec.rmse
            row['{}_pcc'.format(rec.name)] = (np.nan if rec.pcc is None
                                              else rec.pcc)
        row['avg_rmse'] = self.mean_rmse
        row['avg_pcc'] = np.nan if self.mean_pcc is None else self.mean_pcc
        row['mean_nll'] = np.nan if self.mean_nll is None else self.mean_nll
        row['samples'] = self.sample_count
        return row

    def __repr__(self):
        return ('{0.__class__.__name__}(variant={0.variant!r}, '
                'samples={0.sample_count}, mean_rmse={0.mean_rmse:.4f})'
                ''.format(self))


def evaluate(model, data, affine=None):
    '''Score the point estimates of ``model`` on ``data``

    Parameters
    ----------
    model : HeadModel
    data : Dataset
    affine : AffineMap, optional
        Defaults to the model's own output map

    Returns
    -------
    EvalReport
    '''
    if not len(data):
        raise InvalidInputError('Cannot evaluate on an empty dataset')
    if data.feature_dim != model.config.input_dim:
        raise SchemaError('Dataset features have dimension {}, model expects '
                          '{}'.format(data.feature_dim,
                                      model.config.input_dim))
    if affine is None:
        affine = model.affine

    points = predict_points(model, data.features, affine)
    records = []
    for dim, name in enumerate(LABEL_NAMES):
        pred, truth = points[:, dim], data.labels[:, dim]
        try:
            corr = pcc(pred, truth)
        except (UndefinedCorrelationError, InvalidInputError) as ex:
            logger.warning('PCC for %s reported as missing: %s', name, ex)
            corr = None
        records.append(DimensionRecord(name, rmse(pred, truth), corr))

    variant = model.config.variant
    mean_nll = None
    if variant != 'mse':
        mean_nll = (mean_loss(model, data, affine, variant) +
                    0.5 * affine.dim * LOG_2PI)

    report = EvalReport(records, len(data), variant, mean_nll)
    logger.info('Evaluated %s model on %d samples: avg RMSE %.4f, avg PCC %s',
                variant, len(data), report.mean_rmse,
                '-' if report.mean_pcc is None
                else '{:.4f}'.format(report.mean_pcc))
    return report


def report_table(reports, tags):
    '''Per-model table: one row per tag, RMSE/PCC column pairs per dimension

    Parameters
    ----------
    reports : sequence of EvalReport
    tags : sequence of str
    '''
    reports, tags = list(reports), list(tags)
    if len(reports) != len(tags):
        raise InvalidInputError('{} reports but {} tags'
                                ''.format(len(reports), len(tags)))
    rows = []
    for tag, report in zip(tags, reports):
        row = collections.OrderedDict(model=tag, variant=report.variant)
        row.update(report.as_row())
        rows.append(row)
    return pd.DataFrame(rows)


def format_table(frame, digits=4):
    '''Plain-text rendering of a report frame; missing values show as -'''
    return frame.to_string(index=False, na_rep='-',
                           float_format=lambda v: '{:.{}f}'.format(v, digits)
                           ) + '\n'


def average_table(reports, names, label='dataset'):
    '''Average PCC and RMSE across the five dimensions, one row per report'''
    reports, names = list(reports), list(names)
    if len(reports) != len(names):
        raise InvalidInputError('{} reports but {} names'
                                ''.format(len(reports), len(names)))
    rows = [collections.OrderedDict([
                (label, name),
                ('avg_pcc', np.nan if r.mean_pcc is None else r.mean_pcc),
                ('avg_rmse', r.mean_rmse),
                ('samples', r.sample_count)])
            for name, r in zip(names, reports)]
    return pd.DataFrame(rows, columns=[label, 'avg_pcc', 'avg_rmse',
                                       'samples'])


def aggregate_reports(reports):
    '''Mean and sample standard deviation (ddof=1) over runs

    Returns
    -------
    pandas.DataFrame
        One row per dimension plus an ``average`` row, columns rmse_mean,
        rmse_std, pcc_mean, pcc_std, runs. A PCC that is missing in any run
        is missing in the aggregate.
    '''
    reports = list(reports)
    if len(reports) < 2:
        raise InvalidInputError('Aggregation needs at least 2 runs (got {})'
                                ''.format(len(reports)))

    names = list(LABEL_NAMES) + ['average']
    rmse_runs = np.array([[rec.rmse for rec in r.records] + [r.mean_rmse]
                          for r in reports])
    pcc_runs = np.array([[np.nan if rec.pcc is None else rec.pcc
                          for rec in r.records] +
                         [np.nan if r.mean_pcc is None else r.mean_pcc]
                         for r in reports])

    frame = pd.DataFrame({'dimension': names,
                          'rmse_mean': np.mean(rmse_runs, axis=0),
                          'rmse_std': np.std(rmse_runs, axis=0, ddof=1),
                          'pcc_mean': np.mean(pcc_runs, axis=0),
                          'pcc_std': np.std(pcc_runs, axis=0, ddof=1),
                          'runs': len(reports)})
    return frame


def format_aggregate(frame, digits=4):
    '''Render an aggregate frame as ``mean +- std`` columns'''
    def cell(mean, std):
        if np.isnan(mean):
            return '-'
        return '{:.{d}f} +- {:.{d}f}'.format(mean, std, d=digits)

    lines = ['{:<10s} {:>22s} {:>22s}'.format('dimension', 'RMSE', 'PCC')]
    for row in frame.itertuples(index=False):
        lines.append('{:<10s} {:>22s} {:>22s}'.format(
            row.dimension, cell(row.rmse_mean, row.rmse_std),
            cell(row.pcc_mean, row.pcc_std)))
    return '\n'.join(lines) + '\n'


def ablation_table(with_affine, without_affine, epoch):
    '''Holdout averages with and without the output affine map at one epoch'''
    frame = average_table([with_affine, without_affine],
                          ['with_affine', 'without_affine'], label='model')
    frame.insert(1, 'epoch', int(epoch))
    return frame
