"""Exception hierarchy shared across the package.

Argument errors (bad values passed by the caller) raise plain
:class:`ValueError`.  Everything that can fail at run time for
data-dependent reasons derives from :class:`QuantfitError` so callers can
catch one base class around a whole pipeline.
"""


class QuantfitError(Exception):
    """Base class for runtime failures raised by this package."""


class ConfigError(QuantfitError):
    """A scenario configuration file is missing, malformed, or inconsistent."""


class GenerationError(QuantfitError):
    """A randomized generator could not produce a valid object (e.g. a
    monotone threshold set) within its retry budget."""


class SearchRangeError(QuantfitError):
    """A search bracket does not contain the feature being located."""


class InsufficientDataError(QuantfitError):
    """Not enough usable samples/rows/points to carry out the operation."""


class SingularSystemError(QuantfitError):
    """A linear system is rank deficient (or too ill-conditioned to trust).

    Attributes
    ----------
    condition : float
        Ratio of largest to smallest singular value of the system matrix
        (``inf`` when the smallest singular value underflows to zero).
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class InvalidEstimateError(QuantfitError):
    """A recovered parameter lies outside its physically meaningful range."""


class ConvergenceError(QuantfitError):
    """An iterative routine exhausted its iteration budget before meeting
    its stopping rule."""


class NoPeakError(QuantfitError):
    """A spectrum contains no usable tone to locate."""
