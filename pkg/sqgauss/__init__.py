from .errors import (SqGaussError, InvalidInputError, InvalidConfigError,
                     SchemaError, DatasetParseError, NumericFailureError,
                     UndefinedCorrelationError)
from .gaussian import AffineMap, GaussianParams
from .head import HeadConfig, HeadModel, init_head, predict
from .trainer import TrainConfig, train
from .dataio import Dataset, LabeledSample, load_dataset, write_dataset
from .metrics import EvalReport, evaluate

__version__ = '0.1.0'
