'''Mini-batch maximum-likelihood training of the prediction head'''
import collections
import dataclasses
import logging
import time

import numpy as np
import pandas as pd
from boltons.iterutils import chunked

from .adam import AdamState, adam_step
from .errors import InvalidConfigError, InvalidInputError, NumericFailureError
from .gaussian import AffineMap
from .head import backward, forward, forward_cached, init_head
from .losses import VARIANTS, batch_loss_and_grad


logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    '''Optimizer and loop settings

    Defaults are Adam with lr=1e-4, betas (0.9, 0.999), 30 epochs.
    '''
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    variant: str = 'full'
    affine: AffineMap = dataclasses.field(default_factory=AffineMap.rating_scale)

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise InvalidConfigError('learning_rate must be non-negative '
                                     '(got {})'.format(self.learning_rate))
        for name in ('beta1', 'beta2'):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise InvalidConfigError('{} must be in [0, 1) (got {})'
                                         ''.format(name, value))
        if not self.epsilon > 0:
            raise InvalidConfigError('epsilon must be positive (got {})'
                                     ''.format(self.epsilon))
        if self.epochs < 1:
            raise InvalidConfigError('epochs must be >= 1 (got {})'
                                     ''.format(self.epochs))
        if self.batch_size < 1:
            raise InvalidConfigError('batch_size must be >= 1 (got {})'
                                     ''.format(self.batch_size))
        if self.seed < 0:
            raise InvalidConfigError('seed must be non-negative (got {})'
                                     ''.format(self.seed))
        if self.variant not in VARIANTS:
            raise InvalidConfigError('Unknown variant {!r}'
                                     ''.format(self.variant))


EpochRecord = collections.namedtuple('EpochRecord',
                                     'epoch train_loss val_loss seconds')


class TrainTrace:
    '''Per-epoch training record'''
    columns = ('epoch', 'train_loss', 'val_loss', 'seconds')

    def __init__(self, records=None):
        self.records = list(records or [])

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def train_losses(self):
        return [rec.train_loss for rec in self.records]

    def to_frame(self):
        return pd.DataFrame(self.records, columns=self.columns)

    def format_table(self, include_time=True):
        '''One epoch per line: epoch, train_loss, val_loss, seconds'''
        lines = ['{:>5s} {:>14s} {:>14s} {:>9s}'.format(*self.columns)]
        for rec in self.records:
            val = ('{:14.6f}'.format(rec.val_loss)
                   if rec.val_loss is not None else '{:>14s}'.format('-'))
            seconds = rec.seconds if include_time else 0.0
            lines.append('{:5d} {:14.6f} {} {:9.3f}'.format(
                rec.epoch, rec.train_loss, val, seconds))
        return '\n'.join(lines) + '\n'

    def write(self, path, include_time=True):
        with open(path, 'w', newline='\n') as f:
            f.write(self.format_table(include_time=include_time))

    def __repr__(self):
        return '{}(epochs={})'.format(self.__class__.__name__, len(self))


def mean_loss(model, data, affine, variant=None, batch_size=1024):
    '''Mean per-sample training loss of ``model`` on a dataset'''
    if variant is None:
        variant = model.config.variant
    total = 0.0
    for start in range(0, len(data), batch_size):
        stop = start + batch_size
        raw = np.atleast_2d(forward(model, data.features[start:stop]))
        loss, _ = batch_loss_and_grad(variant, raw, data.labels[start:stop],
                                      affine)
        total += float(np.sum(loss))
    return total / len(data)


def train(data, val, head_cfg, cfg, callback=None, model=None):
    '''Fit a head by minimizing the mean per-sample loss of its variant

    Parameters
    ----------
    data : Dataset
        Training set
    val : Dataset or None
        Validation set; its loss is reported, never used for selection
    head_cfg : HeadConfig
    cfg : TrainConfig
    callback : callable, optional
        Called as ``callback(record, model)`` after every epoch
    model : HeadModel, optional
        Start from this model instead of ``init_head(head_cfg)``; it is
        updated in place

    Returns
    -------
    model : HeadModel
    trace : TrainTrace
    '''
    if len(data) == 0:
        raise InvalidInputError('Training set is empty')
    if head_cfg.variant != cfg.variant:
        raise InvalidConfigError('Head variant {!r} does not match training '
                                 'variant {!r}'.format(head_cfg.variant,
                                                       cfg.variant))
    if data.feature_dim != head_cfg.input_dim:
        raise InvalidInputError('Training features have dimension {}, head '
                                'expects {}'.format(data.feature_dim,
                                                    head_cfg.input_dim))
    if val is not None and len(val) and val.feature_dim != head_cfg.input_dim:
        raise InvalidInputError('Validation features have dimension {}, head '
                                'expects {}'.format(val.feature_dim,
                                                    head_cfg.input_dim))

    if model is None:
        model = init_head(head_cfg)
    model.affine = cfg.affine
    params = model.params
    state = AdamState()
    rng = np.random.default_rng(cfg.seed)
    trace = TrainTrace()

    logger.info('Training %s head %s on %d samples for %d epochs '
                '(lr=%g, batch=%d, seed=%d)', cfg.variant,
                head_cfg.layer_dims, len(data), cfg.epochs,
                cfg.learning_rate, cfg.batch_size, cfg.seed)

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(data))
        total = 0.0
        for batch, idx in enumerate(chunked(order.tolist(), cfg.batch_size)):
            idx = np.asarray(idx)
            dropout_seed = int(rng.integers(0, 2 ** 63 - 1))
            raw, cache = forward_cached(model, data.features[idx],
                                        training=True,
                                        dropout_seed=dropout_seed)
            loss, d_raw = batch_loss_and_grad(cfg.variant, raw,
                                              data.labels[idx], cfg.affine)
            batch_loss = float(np.mean(loss))
            if not np.isfinite(batch_loss):
                logger.error('Non-finite loss at epoch %d batch %d',
                             epoch, batch)
                raise NumericFailureError('Loss is not finite', epoch=epoch,
                                          batch=batch)

            grads = backward(model, cache, d_raw / len(idx))
            try:
                adam_step(params, grads, state, cfg)
            except NumericFailureError as ex:
                logger.error('Non-finite gradient at epoch %d batch %d',
                             epoch, batch)
                raise NumericFailureError('Gradient is not finite',
                                          block=ex.block, epoch=epoch,
                                          batch=batch) from ex

            total += float(np.sum(loss))
            logger.debug('Epoch %d batch %d loss %.6f', epoch, batch,
                         batch_loss)

        val_loss = None
        if val is not None and len(val):
            val_loss = mean_loss(model, val, cfg.affine, cfg.variant)
        record = EpochRecord(epoch, total / len(data), val_loss,
                             time.perf_counter() - t0)
        trace.append(record)
        logger.info('Epoch %d/%d train_loss=%.6f val_loss=%s (%.2f s)',
                    epoch, cfg.epochs, record.train_loss,
                    '-' if val_loss is None else '{:.6f}'.format(val_loss),
                    record.seconds)

        if callback is not None:
            callback(record, model)

    return model, trace
