"""Exception types shared across the package."""


class AtomSqueezeError(Exception):
    """Base class for all package errors."""


class InvalidConfig(AtomSqueezeError):
    """A configuration violates one of its declared constraints."""


class ChannelSumError(InvalidConfig):
    """Channel fractions |alpha_0|^2 + |alpha_1|^2 + |alpha_2|^2 do not sum to 1."""


class NegativeParameter(InvalidConfig):
    """A parameter with a sign constraint is out of range."""


class FeedbackWithoutChannel1(InvalidConfig):
    """Feedback strength c > 0 requires a non-empty channel 1."""


class ExceptionalCase(AtomSqueezeError):
    """The drift matrix is singular by construction (det A = 0 manifold);
    no unique stationary state exists."""


class SingularDrift(AtomSqueezeError):
    """The drift matrix is numerically singular outside the exceptional case."""


class SingularResolvent(AtomSqueezeError):
    """(A^2 + mu^2 I) is numerically singular; the spectrum is undefined here."""


class StepRejected(AtomSqueezeError):
    """The positivity projection moved the state further than the step-size
    bound allows; the integration step dt is too large."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class InsufficientData(AtomSqueezeError):
    """Not enough trajectories for the requested estimate."""


class InvalidPoint(AtomSqueezeError):
    """A search point violates bounds or produces an invalid configuration."""


class NoFeasiblePoint(AtomSqueezeError):
    """Every optimizer start was infeasible."""
