"""Exception hierarchy.

Every error raised by the engines derives from :class:`PdmpError`, so the
CLI can report the class name on a single diagnostic line.
"""


class PdmpError(Exception):
    """Base class for all pdmpsim errors."""


# ode_core ---------------------------------------------------------------

class SolverError(PdmpError):
    """The adaptive integrator could not complete.

    ``t`` and ``y`` hold the last accepted point, when known.
    """

    def __init__(self, message="", t=None, y=None):
        super().__init__(message)
        self.t = t
        self.y = y


class MaxStepsExceeded(SolverError):
    pass


class StepUnderflow(SolverError):
    pass


class NonFiniteDerivative(SolverError):
    pass


class OutOfSpan(PdmpError, ValueError):
    pass


class NoSignChange(PdmpError):
    pass


class BracketInvalid(PdmpError, ValueError):
    pass


# models and engines ------------------------------------------------------

class NegativeRate(PdmpError):
    pass


class RateFloorHit(PdmpError):
    """The total rate dropped to the floor: the next jump time is infinite."""


class BoundViolated(PdmpError):
    """The total rate exceeded the rejection bound at a candidate time."""


class EventMissed(PdmpError):
    pass


class NoEventBeforeHorizon(PdmpError):
    pass


class StreamExhausted(PdmpError):
    pass


class StreamMismatch(PdmpError, ValueError):
    pass


class InvalidJumpCount(PdmpError, ValueError):
    pass


class EmptyResults(PdmpError, ValueError):
    pass
