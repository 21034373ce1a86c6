'''Command-line interface

Subcommands: synth, train, eval, predict, battery, ablation. Run
``sqgauss <command> --help`` for the flags of each command.
'''
import argparse
import concurrent.futures
import logging
import os
import sys

import numpy as np
import pandas as pd

from . import checkpoint as ckpt
from . import dataio
from . import diagnostics
from . import metrics
from .config import DEFAULTS, read_config, resolve_config
from .errors import InvalidConfigError, SchemaError, SqGaussError
from .head import predict
from .trainer import train


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'

# flag name -> (type, help); defaults come from RunConfig
RUN_FLAGS = {
    'train': (str, 'training dataset file'),
    'val': (str, 'validation / holdout dataset file'),
    'checkpoint': (str, 'model checkpoint path'),
    'report_dir': (str, 'directory for traces and report tables'),
    'hidden_dims': (str, 'comma-separated hidden layer widths'),
    'variant': (str, 'head variant: full, independent or mse'),
    'dropout_rate': (float, 'dropout probability on hidden layers'),
    'learning_rate': (float, 'Adam learning rate'),
    'beta1': (float, 'Adam first-moment decay'),
    'beta2': (float, 'Adam second-moment decay'),
    'epsilon': (float, 'Adam epsilon'),
    'epochs': (int, 'training epochs'),
    'batch_size': (int, 'mini-batch size'),
    'seed': (int, 'initialization and shuffling seed'),
    'runs': (int, 'number of seeds in a battery'),
    'workers': (int, 'worker processes for a battery'),
    'ablation_epoch': (int, 'epoch at which the ablation compares models'),
}
BOOL_FLAGS = {
    'no_affine': 'use the identity output map (A=I, b=0)',
    'strict': 'reject labels outside [1, 5]',
}


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError('must be a positive integer (got {})'
                                         ''.format(text))
    return value


def non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError('must be non-negative (got {})'
                                         ''.format(text))
    return value


def positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError('must be positive (got {})'
                                         ''.format(text))
    return value


def _flag(name):
    return '--' + name.replace('_', '-')


def _add_run_flags(parser, names):
    parser.add_argument('--config', default=argparse.SUPPRESS,
                        help='key = value run configuration file')
    for name in names:
        default = DEFAULTS[name]
        if isinstance(default, tuple):
            default = ','.join(str(v) for v in default)
        if name in BOOL_FLAGS:
            parser.add_argument(_flag(name), action='store_true',
                                default=argparse.SUPPRESS,
                                help='{} (default: {})'.format(BOOL_FLAGS[name],
                                                               default))
        else:
            kind, text = RUN_FLAGS[name]
            parser.add_argument(_flag(name), type=kind,
                                default=argparse.SUPPRESS,
                                help='{} (default: {})'.format(text, default))


def _run_config(args):
    overrides = {name: value for name, value in vars(args).items()
                 if name in DEFAULTS}
    return resolve_config(getattr(args, 'config', None), overrides)


def _explicit_keys(args):
    keys = {name for name in vars(args) if name in DEFAULTS}
    path = getattr(args, 'config', None)
    if path is not None:
        keys.update(read_config(path))
    return keys


def _report_path(cfg, filename):
    os.makedirs(cfg.report_dir, exist_ok=True)
    return os.path.join(cfg.report_dir, filename)


def _stem(path):
    return os.path.splitext(os.path.basename(str(path)))[0]


def cmd_synth(args):
    '''Write a synthetic training set, an optional holdout set and the
    ground-truth sidecar'''
    total = args.n + args.n_holdout
    spec = dataio.SynthSpec.default(args.d, total, seed=args.seed,
                                    weight_scale=args.weight_scale,
                                    noise_scale=args.noise_scale)
    data, _ = dataio.generate_synthetic(spec)

    ext = '.h5' if args.format == 'hdf5' else '.csv'
    os.makedirs(args.out, exist_ok=True)
    dataio.write_dataset(os.path.join(args.out, 'train' + ext),
                         data[np.arange(args.n)])
    if args.n_holdout:
        dataio.write_dataset(os.path.join(args.out, 'holdout' + ext),
                             data[np.arange(args.n, total)])
    dataio.write_ground_truth(os.path.join(args.out, dataio.TRUTH_FILENAME),
                              spec)
    print('N={} holdout={} D={} seed={}'.format(args.n, args.n_holdout,
                                                args.d, args.seed))
    return 0


def _load_pair(cfg):
    cfg.require('train')
    data = dataio.load_dataset(cfg.train, strict=cfg.strict)
    val = None
    if cfg.val is not None:
        cfg.require('val')
        val = dataio.load_dataset(cfg.val, strict=cfg.strict)
    return data, val


def cmd_train(args):
    '''Train one head and write its checkpoint and per-epoch trace'''
    cfg = _run_config(args)
    data, val = _load_pair(cfg)
    model, trace = train(data, val, cfg.head_config(data.feature_dim),
                         cfg.train_config())

    ckpt.save_checkpoint(cfg.checkpoint, model)
    trace_path = _report_path(cfg, 'trace.txt')
    trace.write(trace_path)
    logger.info('Wrote checkpoint %s and trace %s', cfg.checkpoint,
                trace_path)
    print(trace.format_table(), end='')
    return 0


def _load_model(cfg, explicit):
    cfg.require('checkpoint')
    stored = ckpt.read_header(cfg.checkpoint).get('variant')
    if 'variant' in explicit and stored != cfg.variant:
        raise SchemaError('Checkpoint {} holds a {!r} model but the '
                          'configuration asks for {!r}'
                          ''.format(cfg.checkpoint, stored, cfg.variant))
    return ckpt.load_checkpoint(cfg.checkpoint)


def _datasets(args, cfg):
    paths = list(args.datasets)
    if not paths:
        paths = [p for p in (cfg.val, cfg.train) if p is not None][:1]
    if not paths:
        raise InvalidConfigError('No dataset to evaluate (pass a file or set '
                                 'val/train)')
    for path in paths:
        if not os.path.exists(path):
            raise InvalidConfigError('dataset file not found: {}'
                                     ''.format(path))
    return paths


def cmd_eval(args):
    '''Evaluate a checkpoint on one or more datasets and write report tables'''
    cfg = _run_config(args)
    model = _load_model(cfg, _explicit_keys(args))
    paths = _datasets(args, cfg)
    names = [_stem(path) for path in paths]

    reports = []
    for path, name in zip(paths, names):
        data = dataio.load_dataset(path, strict=cfg.strict)
        reports.append(metrics.evaluate(model, data))

        if args.scatter is not None:
            pair = diagnostics.parse_dim_pair(args.scatter)
            frame = diagnostics.emit_correlation_scatter(model, data,
                                                         dim_pair=pair)
            diagnostics.write_table(_report_path(
                cfg, 'scatter_{}_{}_{}.csv'.format(
                    name, *(dataio.LABEL_NAMES[i] for i in pair))), frame)

        for index in args.grid or ():
            if not (0 <= index < len(data)):
                raise InvalidConfigError('Grid sample {} out of range for {} '
                                         '({} samples)'.format(index, path,
                                                               len(data)))
            pair = diagnostics.parse_dim_pair(args.pair)
            g = predict(model, data.features[index]).gaussian
            frame = diagnostics.emit_marginal_grid(g, pair,
                                                   resolution=args.resolution)
            diagnostics.write_table(_report_path(
                cfg, 'grid_{}_{}.csv'.format(name, index)), frame)

    table = metrics.report_table(reports, names)
    averages = metrics.average_table(reports, names)
    diagnostics.write_table(_report_path(cfg, 'eval.csv'), table)
    diagnostics.write_table(_report_path(cfg, 'average.csv'), averages)

    text = metrics.format_table(table) + '\n' + metrics.format_table(averages)
    with open(_report_path(cfg, 'eval.txt'), 'w', newline='\n') as f:
        f.write(text)
    print(text, end='')
    return 0


def cmd_predict(args):
    '''Write point estimates, predictive std and correlations per sample'''
    cfg = _run_config(args)
    model = _load_model(cfg, _explicit_keys(args))
    path = _datasets(args, cfg)[0]
    data = dataio.load_dataset(path, strict=cfg.strict)
    frame = diagnostics.prediction_table(model, data)

    out = args.out or _report_path(cfg, 'predictions_{}.csv'
                                   ''.format(_stem(path)))
    diagnostics.write_table(out, frame)
    logger.info('Wrote %d predictions to %s', len(frame), out)
    return 0


def battery_run(cfg, seed):
    '''Train and evaluate one seed of a battery'''
    cfg = cfg.replace(seed=seed)
    data, val = _load_pair(cfg)
    model, _ = train(data, val, cfg.head_config(data.feature_dim),
                     cfg.train_config())
    return metrics.evaluate(model, val)


def cmd_battery(args):
    '''Train ``runs`` seeds and aggregate their holdout metrics'''
    cfg = _run_config(args)
    if cfg.runs < 2:
        raise InvalidConfigError('A battery needs at least 2 runs (got {})'
                                 ''.format(cfg.runs))
    cfg.require('train', 'val')
    seeds = [cfg.seed + k for k in range(cfg.runs)]

    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(cfg.workers) as pool:
            reports = list(pool.map(battery_run, [cfg] * len(seeds), seeds))
    else:
        reports = [battery_run(cfg, seed) for seed in seeds]

    aggregate = metrics.aggregate_reports(reports)
    runs = metrics.report_table(reports, ['seed{}'.format(s) for s in seeds])
    diagnostics.write_table(_report_path(cfg, 'battery.csv'), aggregate)
    diagnostics.write_table(_report_path(cfg, 'battery_runs.csv'), runs)
    text = metrics.format_aggregate(aggregate)
    with open(_report_path(cfg, 'battery.txt'), 'w', newline='\n') as f:
        f.write(text)
    print(text, end='')
    return 0


def _ablation_reports(cfg, data, val):
    '''Holdout reports at ablation_epoch and at the final epoch'''
    reports = {}

    def callback(record, model):
        if record.epoch in (cfg.ablation_epoch, cfg.epochs):
            reports[record.epoch] = metrics.evaluate(model, val)

    train(data, val, cfg.head_config(data.feature_dim), cfg.train_config(),
          callback=callback)
    return reports


def cmd_ablation(args):
    '''Train with and without the output affine map and compare holdout
    averages'''
    cfg = _run_config(args)
    cfg.require('train', 'val')
    if cfg.ablation_epoch > cfg.epochs:
        raise InvalidConfigError('ablation_epoch {} is beyond the last epoch '
                                 '{}'.format(cfg.ablation_epoch, cfg.epochs))
    data, val = _load_pair(cfg)

    with_affine = _ablation_reports(cfg.replace(no_affine=False), data, val)
    without = _ablation_reports(cfg.replace(no_affine=True), data, val)

    epochs = sorted({cfg.ablation_epoch, cfg.epochs})
    frame = pd.concat([metrics.ablation_table(with_affine[e], without[e], e)
                       for e in epochs], ignore_index=True)
    diagnostics.write_table(_report_path(cfg, 'ablation.csv'), frame)
    text = metrics.format_table(frame)
    with open(_report_path(cfg, 'ablation.txt'), 'w', newline='\n') as f:
        f.write(text)
    print(text, end='')
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog='sqgauss',
        description='Multivariate Gaussian quality-score regression')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='log warnings and errors only')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser('synth', formatter_class=fmt,
                       help='generate a synthetic dataset')
    p.add_argument('--n', type=positive_int, default=5000,
                   help='training samples')
    p.add_argument('--n-holdout', type=non_negative_int, default=1000,
                   help='holdout samples')
    p.add_argument('--d', type=positive_int, default=32,
                   help='feature dimension')
    p.add_argument('--seed', type=non_negative_int, default=0,
                   help='generator seed')
    p.add_argument('--weight-scale', type=positive_float, default=1.0,
                   help='scale of the ground-truth weights')
    p.add_argument('--noise-scale', type=positive_float, default=1.0,
                   help='scale of the noise standard deviations')
    p.add_argument('--out', default='data', help='output directory')
    p.add_argument('--format', choices=('csv', 'hdf5'), default='csv',
                   help='dataset file format')
    p.set_defaults(func=cmd_synth)

    train_flags = [name for name in DEFAULTS
                   if name not in ('runs', 'workers', 'ablation_epoch')]

    p = sub.add_parser('train', formatter_class=fmt, help='train a model')
    _add_run_flags(p, train_flags)
    p.set_defaults(func=cmd_train)

    for name, func, text in (('eval', cmd_eval, 'evaluate a checkpoint'),
                             ('predict', cmd_predict,
                              'export per-sample predictive uncertainty')):
        p = sub.add_parser(name, formatter_class=fmt, help=text)
        p.add_argument('datasets', nargs='*', metavar='dataset',
                       help='dataset files (default: val, else train)')
        _add_run_flags(p, ['checkpoint', 'report_dir', 'variant', 'strict',
                           'train', 'val'])
        if name == 'eval':
            p.add_argument('--scatter', metavar='DIM,DIM', default=None,
                           help='emit label/correlation scatter for a pair')
            p.add_argument('--grid', type=non_negative_int, action='append',
                           metavar='INDEX', default=None,
                           help='emit a marginal density grid for a sample '
                                '(repeatable)')
            p.add_argument('--pair', default='mos,noi',
                           help='dimension pair of the density grid')
            p.add_argument('--resolution', type=positive_int,
                           default=diagnostics.DEFAULT_RESOLUTION,
                           help='grid points per axis')
        else:
            p.add_argument('--out', default=None,
                           help='output file (default: '
                                'REPORT_DIR/predictions_<dataset>.csv)')
        p.set_defaults(func=func)

    p = sub.add_parser('battery', formatter_class=fmt,
                       help='train several seeds and aggregate metrics')
    _add_run_flags(p, [name for name in DEFAULTS
                       if name not in ('checkpoint', 'ablation_epoch')])
    p.set_defaults(func=cmd_battery)

    p = sub.add_parser('ablation', formatter_class=fmt,
                       help='compare training with and without the output '
                            'affine map')
    _add_run_flags(p, [name for name in DEFAULTS
                       if name not in ('checkpoint', 'runs', 'workers',
                                       'no_affine')])
    p.set_defaults(func=cmd_ablation)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        return args.func(args)
    except (SqGaussError, OSError) as ex:
        logger.error('%s failed: %s', args.command, ex)
        return 1


if __name__ == '__main__':
    sys.exit(main())
