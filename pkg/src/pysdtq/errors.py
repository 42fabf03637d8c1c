#
class SDTError(Exception):
    '''
    Base class for all errors raised by pysdtq.
    '''


#
class InvalidArgumentError(SDTError, ValueError):
    '''
    A parameter is out of range, or two fields that must share
    a grid do not.
    '''


#
class InvalidInputError(SDTError, ValueError):
    '''
    The input field violates the contract of the operation, for
    example a zero cell handed to dither().
    '''


#
class EmptySetError(SDTError):
    '''
    A distance was requested to an empty target set.
    '''


#
class EmptyBandError(SDTError):
    '''
    A curvature band contains no usable cell.
    '''


#
class FormatError(SDTError):
    '''
    An SDF1 file could not be decoded.

    Attributes:

    offset : byte offset at which decoding failed.
    expected : expected number of bytes (size errors only, else None).
    actual : actual number of bytes (size errors only, else None).
    '''

    def __init__(self,message,offset,expected=None,actual=None):
        super().__init__(f'{message} (at byte offset {offset})')
        self.offset = offset
        self.expected = expected
        self.actual = actual


#
class NumericalFailureError(SDTError, ArithmeticError):
    '''
    Non-finite values appeared during reinitialization.

    Attributes:

    iteration : the iteration at which the failure was detected.
    reports : the ErrorReports logged before the failure.
    '''

    def __init__(self,message,iteration,reports=()):
        super().__init__(f'{message} (iteration {iteration})')
        self.iteration = iteration
        self.reports = list(reports)
