"""Exception hierarchy for omnideblur.

Core modules raise these; the CLI handlers map them to exit codes.
"""


class DeblurError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionError(DeblurError, ValueError):
    """Array shapes do not fit the requested operation"""


class ConfigurationError(DeblurError, ValueError):
    """A parameter or parameter combination is invalid"""


class NumericDivergenceError(DeblurError, ArithmeticError):
    """A solver produced non-finite values"""


class OperatorNotPSDError(DeblurError, ArithmeticError):
    """Conjugate gradients met a direction with d^T A d <= 0"""


class DegenerateInputError(DeblurError):
    """The input carries no information the solver can use (e.g. all-zero latent)"""


class UndefinedRatioError(DeblurError):
    """The l1/l2 ratio was requested for an all-zero stack"""


class PyramidStateError(DeblurError):
    """Internal inconsistency between pyramid state and level geometry"""


class ImageIOError(DeblurError, OSError):
    """An image or kernel file could not be read or written"""

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")
