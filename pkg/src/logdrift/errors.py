"""Exception types shared across the package."""


class DriftError(Exception):
    """Base class for all logdrift domain errors."""


class AllZeroVector(DriftError):
    """A count vector with zero total was passed where positive mass is required."""


class EmptySample(DriftError):
    """An operation requiring at least one vector received none."""


class LengthMismatch(DriftError):
    """Vectors of differing lengths were mixed in one operation."""


class EmptyCorpus(DriftError):
    """Template mining was asked to run on an empty training corpus."""


class UnsortedInput(DriftError):
    """A timestamp regressed in a stream that must be time-ordered."""


class ZeroTotal(DriftError):
    """A sample whose grand total is zero cannot be used for estimation."""


class DegenerateSample(DriftError):
    """Too few samples or categories for the requested statistic."""


class NonPositiveInput(DriftError):
    """An input that must be strictly positive contained a zero or negative value."""


class EmptyPool(DriftError):
    """A simulation draw pool contained no vectors."""


class InvalidDetection(DriftError):
    """A detection index fell strictly between 0 and the grace period."""


class FormatError(DriftError):
    """A file or payload did not conform to the expected interchange format."""


class TrainingUnknownViolation(DriftError):
    """Training-mode vector extraction produced nonzero unknown-slot counts."""
