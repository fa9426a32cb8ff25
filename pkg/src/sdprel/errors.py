"""Exception hierarchy shared by the toolkit."""


class SdprelError(Exception):
    """Base class for all toolkit errors."""


# treebank reading / entity handling
class FormatError(SdprelError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CycleError(FormatError):
    pass


class MultiRootError(FormatError):
    pass


class OverlapError(SdprelError, ValueError):
    pass


class NoSpanHeadError(SdprelError, ValueError):
    pass


class UnknownLabelError(FormatError):
    pass


class DanglingEntityError(SdprelError, KeyError):
    pass


# paths
class TokenOutOfRange(SdprelError, IndexError):
    pass


class SdpFormatError(SdprelError, ValueError):
    pass


# features
class DimensionMismatch(FormatError):
    pass


class MalformedLine(FormatError):
    pass


class MissingPath(SdprelError, ValueError):
    pass


# model
class ShapeMismatch(SdprelError, ValueError):
    pass


class EmptyDataset(SdprelError, ValueError):
    pass


class CheckpointError(SdprelError, ValueError):
    pass


# tuner
class OutOfSpace(SdprelError, ValueError):
    pass


class SingularKernel(SdprelError, ArithmeticError):
    pass


# evaluation
class TooFewInstances(SdprelError, ValueError):
    pass


class MisalignedInstances(SdprelError, ValueError):
    pass
