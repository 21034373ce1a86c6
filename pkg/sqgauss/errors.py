'''Exception hierarchy shared by all sqgauss modules'''


class SqGaussError(Exception):
    '''Base class for all sqgauss errors'''


class InvalidInputError(SqGaussError, ValueError):
    '''Dimension mismatch, non-finite input or out-of-range index'''


class InvalidConfigError(SqGaussError, ValueError):
    '''Configuration value out of range, or unknown configuration key'''


class SchemaError(SqGaussError, ValueError):
    '''Inconsistent dataset dimensions or checkpoint layout'''


class UndefinedCorrelationError(SqGaussError, ValueError):
    '''Pearson correlation requested for a constant input'''


class DatasetParseError(SqGaussError, ValueError):
    '''Malformed dataset row

    Parameters
    ----------
    message : str
    path : str, optional
        The dataset file
    line : int, optional
        1-based line number within the file
    '''
    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        if line is not None:
            message = '{}:{}: {}'.format(path, line, message)
        super().__init__(message)


class NumericFailureError(SqGaussError, FloatingPointError):
    '''A loss, gradient or parameter became non-finite

    Parameters
    ----------
    message : str
    block : str, optional
        Name of the parameter block or raw entry that failed
    epoch : int, optional
    batch : int, optional
    '''
    def __init__(self, message, *, block=None, epoch=None, batch=None):
        self.block = block
        self.epoch = epoch
        self.batch = batch

        context = []
        if epoch is not None:
            context.append('epoch={}'.format(epoch))
        if batch is not None:
            context.append('batch={}'.format(batch))
        if block is not None:
            context.append('block={}'.format(block))
        if context:
            message = '{} ({})'.format(message, ', '.join(context))
        super().__init__(message)
