"""Exception hierarchy shared by all gibbslab modules."""


class GibbsLabError(Exception):
    """Base class for all errors raised by this package."""


# --- linear algebra ---

class NonHermitianInput(GibbsLabError):
    pass


class EigensolverFailure(GibbsLabError):
    pass


class DomainError(GibbsLabError):
    """A spectral profile was evaluated outside its domain of definition."""


class DimensionMismatch(GibbsLabError):
    pass


class ExpmFailure(GibbsLabError):
    pass


class DegenerateKernel(GibbsLabError):
    """The superoperator kernel is not one-dimensional (non-mixing generator)."""


class NotPSD(GibbsLabError):
    pass


class NumericalDrift(GibbsLabError):
    """Hermiticity or trace drift of an evolved state exceeded its budget."""


class InvalidState(GibbsLabError):
    """A candidate density matrix violates its invariants."""


class InvalidSuperoperator(GibbsLabError):
    pass


# --- model construction ---

class SizeExceeded(GibbsLabError):
    pass


class PrecisionExceedsDimension(GibbsLabError):
    pass


class ResamplingBudgetExceeded(GibbsLabError):
    pass


# --- rounding promises ---

class ParameterOverflow(GibbsLabError):
    pass


class IndexOutOfRange(GibbsLabError):
    pass


class IntervalVanishes(GibbsLabError):
    pass


class InvalidPromise(GibbsLabError):
    pass


# --- spectral profiles ---

class DegreeBudgetExceeded(GibbsLabError):
    pass


class IntervalsTooClose(GibbsLabError):
    pass


class TooManyIntervals(GibbsLabError):
    pass


# --- generators and protocol ---

class NotMixing(GibbsLabError):
    pass


class EnumerationMismatch(GibbsLabError):
    pass


class EmptyPromisedSubspace(GibbsLabError):
    pass


# --- runner ---

class ConfigError(GibbsLabError):
    pass
