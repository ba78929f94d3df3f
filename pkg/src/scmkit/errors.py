"""Exception types shared across the package.

Everything raised on purpose derives from :class:`ScmError`, so callers
(notably the CLI) can distinguish domain failures from genuine bugs.
"""


class ScmError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ScmError):
    """An argument violates a documented precondition."""


class CyclicGraphError(ScmError):
    """The edge set contains a directed cycle.

    The message names a witness cycle.
    """


class ResourceLimitError(ScmError):
    """A configurable size or enumeration cap would be exceeded."""


class ZeroProbabilityError(ScmError):
    """Conditioning on an event of probability zero."""


class PositivityError(ScmError):
    """An identification formula divides by a zero-probability stratum.

    The message names the offending stratum.
    """


class SingularConditioningError(ScmError):
    """Gaussian conditioning on a block with (near-)singular covariance."""


class DescendantConditioningError(ScmError):
    """A plain back-door check received descendants of the treatment.

    Such sets are handled by the pseudo-treatment extension instead.
    """


class WeakInstrumentError(ScmError):
    """An instrumental-variable denominator is numerically zero."""


class ExhaustionError(ScmError):
    """A simulation budget ran out before the request was satisfied."""


class ConstraintError(ScmError):
    """A named parameter constraint of an example builder is violated."""
