'''Run configuration

A run configuration file is flat ``key = value`` text::

    # training run
    train = data/train.csv
    val = data/holdout.csv
    variant = full
    hidden_dims = 256,64
    epochs = 30

Blank lines and ``#`` comments are ignored. Keys are the long command-line
flag names with underscores; a flag given on the command line overrides the
file, and the file overrides the built-in default.
'''
import dataclasses
import logging
import os

from .errors import InvalidConfigError
from .gaussian import AffineMap
from .head import DEFAULT_HIDDEN_DIMS, HeadConfig
from .trainer import TrainConfig


logger = logging.getLogger(__name__)

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def parse_bool(text):
    value = str(text).strip().lower()
    if value in _TRUE:
        return True
    elif value in _FALSE:
        return False
    raise ValueError('not a boolean: {!r}'.format(text))


def parse_int_tuple(text):
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(',') if v.strip())


def _optional_path(text):
    text = str(text).strip()
    return text or None


@dataclasses.dataclass(frozen=True)
class RunConfig:
    '''Paths, head architecture and optimizer settings of a run'''
    train: str = None
    val: str = None
    checkpoint: str = 'model.ckpt'
    report_dir: str = 'reports'
    hidden_dims: tuple = DEFAULT_HIDDEN_DIMS
    variant: str = 'full'
    dropout_rate: float = 0.0
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    no_affine: bool = False
    strict: bool = False
    runs: int = 10
    workers: int = 1
    ablation_epoch: int = 5

    def __post_init__(self):
        # raises InvalidConfigError on out-of-range values
        self.train_config()
        HeadConfig(input_dim=1, hidden_dims=self.hidden_dims,
                   variant=self.variant, dropout_rate=self.dropout_rate,
                   seed=self.seed)
        if self.runs < 1:
            raise InvalidConfigError('runs must be >= 1 (got {})'
                                     ''.format(self.runs))
        if self.workers < 1:
            raise InvalidConfigError('workers must be >= 1 (got {})'
                                     ''.format(self.workers))
        if self.ablation_epoch < 1:
            raise InvalidConfigError('ablation_epoch must be >= 1 (got {})'
                                     ''.format(self.ablation_epoch))

    @property
    def affine(self):
        '''Identity map for the no-affine ablation, else the 2I, 3 map'''
        if self.no_affine:
            return AffineMap.identity()
        return AffineMap.rating_scale()

    def head_config(self, input_dim):
        return HeadConfig(input_dim=input_dim, hidden_dims=self.hidden_dims,
                          variant=self.variant,
                          dropout_rate=self.dropout_rate, seed=self.seed)

    def train_config(self):
        return TrainConfig(learning_rate=self.learning_rate,
                           beta1=self.beta1, beta2=self.beta2,
                           epsilon=self.epsilon, epochs=self.epochs,
                           batch_size=self.batch_size, seed=self.seed,
                           variant=self.variant, affine=self.affine)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def require(self, *names):
        '''Check that the named path settings are set and exist'''
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise InvalidConfigError('No {} file given (use --{} or the '
                                         'config file)'.format(name, name))
            if not os.path.exists(path):
                raise InvalidConfigError('{} file not found: {}'
                                         ''.format(name, path))


PARSERS = {'train': _optional_path,
           'val': _optional_path,
           'checkpoint': str,
           'report_dir': str,
           'hidden_dims': parse_int_tuple,
           'variant': str,
           'dropout_rate': float,
           'learning_rate': float,
           'beta1': float,
           'beta2': float,
           'epsilon': float,
           'epochs': int,
           'batch_size': int,
           'seed': int,
           'no_affine': parse_bool,
           'strict': parse_bool,
           'runs': int,
           'workers': int,
           'ablation_epoch': int,
           }

DEFAULTS = {field.name: field.default
            for field in dataclasses.fields(RunConfig)}


def parse_config_text(text, source='<config>'):
    '''Parse ``key = value`` lines into a dict of typed values'''
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip().replace('-', '_')
        if not sep:
            raise InvalidConfigError('{}:{}: expected key = value'
                                     ''.format(source, lineno))
        if key not in PARSERS:
            raise InvalidConfigError('{}:{}: unknown key {!r}'
                                     ''.format(source, lineno, key))
        try:
            values[key] = PARSERS[key](value.strip())
        except ValueError as ex:
            raise InvalidConfigError('{}:{}: bad value for {}: {}'
                                     ''.format(source, lineno, key, ex)
                                     ) from None
    return values


def read_config(path):
    with open(path, encoding='utf-8') as f:
        return parse_config_text(f.read(), source=path)


def resolve_config(path=None, overrides=None):
    '''Merge defaults, a config file and command-line overrides

    Parameters
    ----------
    path : str, optional
        Config file
    overrides : dict, optional
        Values given on the command line; None entries are ignored

    Returns
    -------
    RunConfig
    '''
    values = {}
    if path is not None:
        values.update(read_config(path))
        logger.debug('Read %d settings from %s', len(values), path)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in PARSERS:
            raise InvalidConfigError('Unknown setting {!r}'.format(key))
        try:
            values[key] = PARSERS[key](value)
        except ValueError as ex:
            raise InvalidConfigError('Bad value for {}: {}'.format(key, ex)
                                     ) from None
    return RunConfig(**values)


def format_config(config):
    '''Render a RunConfig in the file format read_config accepts'''
    lines = []
    for key in PARSERS:
        value = getattr(config, key)
        if value is None:
            value = ''
        elif isinstance(value, tuple):
            value = ','.join(str(v) for v in value)
        elif isinstance(value, bool):
            value = 'true' if value else 'false'
        lines.append('{} = {}'.format(key, value))
    return '\n'.join(lines) + '\n'
