"""Exception types raised across the package."""


class HawkesNetError(Exception):
    """Base class for every error raised by hawkesnet."""


class SupercriticalModel(HawkesNetError, ValueError):
    """Lambda * p >= 1: the mean-field branching does not die out."""


class SpectralFailure(HawkesNetError, ArithmeticError):
    """I - Lambda A_N is not safely invertible, or a solve left a large residual."""


class ExplosionAbort(HawkesNetError, RuntimeError):
    """The simulator hit its hard event-count cap."""


class OracleDomainError(HawkesNetError, ValueError):
    """The cluster sampler was asked to run outside its supported domain."""


class SeriesFailure(HawkesNetError, ArithmeticError):
    """The expected-count series did not reach its truncation tolerance."""


class DegenerateSchedule(HawkesNetError, ValueError):
    """t is too small for the block schedule: floor(t^(1 - 4/(q+1))) == 0."""


class MixedRegime(HawkesNetError, ValueError):
    """No single rate term dominates, so no Gaussian limit law applies."""


class DegenerateEstimate(HawkesNetError, ValueError):
    """A plug-in estimate makes a rate-term denominator non-positive."""
