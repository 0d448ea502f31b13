"""Exception types shared across the package."""


class PrevBiasError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpec(PrevBiasError, ValueError):
    """A population, mechanism, or configuration input violates an invariant."""


class MechanismMismatch(PrevBiasError):
    """The operation needs sampling probabilities that depend on the symptom
    level only, but the supplied population varies them with infection status."""


class ZeroTestingMass(PrevBiasError):
    """The expected number of tested individuals is zero."""


class UndefinedActiveInfo(PrevBiasError):
    """log(p / p0) is undefined because one of the prevalences is zero."""


class EmptySample(PrevBiasError):
    """No individuals were tested."""


class EmptyStratum(PrevBiasError):
    """A positively weighted symptom class contains no tested individuals."""

    def __init__(self, strata, message=None):
        self.strata = tuple(int(s) for s in strata)
        super().__init__(message or f"no tested individuals in symptom classes {self.strata}")


class DivisionByZeroWeight(PrevBiasError):
    """A zero sampling-fraction estimate would have to be inverted."""


class TooLarge(PrevBiasError):
    """Exact enumeration was requested for a population above the supported size."""


class EmptyRegion(PrevBiasError):
    """The constrained share region contains no share vector."""


class RejectionStarvation(PrevBiasError):
    """Rejection sampling accepts too small a fraction of proposals to be usable."""


class BoundaryEstimate(PrevBiasError):
    """A prevalence estimate of exactly 0 or 1 has no logit confidence interval."""


class NegativeVarianceCombination(PrevBiasError):
    """A plug-in variance combination is negative beyond numerical tolerance."""
