"""Exception types raised by gmsdb."""


class GmsdbError(Exception):
    """Base class for all gmsdb errors."""


class SingularMatrixError(GmsdbError, ArithmeticError):
    """A matrix could not be factorized even after regularization."""


class EmptyClusterError(GmsdbError, ValueError):
    """A cluster has no hard-assigned points."""


class DegenerateMatrixError(GmsdbError, ValueError):
    """A distance matrix has no positive off-diagonal entries."""


class ModelFormatError(GmsdbError, ValueError):
    """A model file is malformed or contains non-finite values."""


class VersionMismatchError(ModelFormatError):
    """A model file was written by an incompatible format version."""
