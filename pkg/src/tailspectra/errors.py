"""Exception hierarchy for tailspectra."""
from __future__ import annotations


class TailSpectraError(Exception):
    """Base class for all errors raised by this package."""


class BadParam(TailSpectraError, ValueError):
    """A distribution or model parameter is outside its admissible range."""


class PoleHit(TailSpectraError, ArithmeticError):
    """A transform was evaluated at (or too near) a zero of its denominator."""


class NoBracket(TailSpectraError):
    """The search bracket does not contain a sign change of the denominator."""


class Cancellation(TailSpectraError):
    """The numerator vanishes at the candidate abscissa (removable point)."""


class AmbiguousOrder(TailSpectraError):
    """The winding number is too far from an integer to fix the pole order."""


class NotConverged(TailSpectraError):
    """Contour quadrature failed to stabilise under node doubling."""


class ContourThroughPole(TailSpectraError):
    """A contour kept passing through a zero after all jitter retries."""


class PoleOfQ(TailSpectraError, ZeroDivisionError):
    """Q_omega was evaluated at one of its poles (a non-negative integer)."""


class NotFound(TailSpectraError):
    """The omega grid was exhausted without every lemma check passing."""


class MethodDisagreement(TailSpectraError):
    """Closed-form and quadrature integrals disagree beyond tolerance."""


class HypothesisFailure(TailSpectraError):
    """The input does not meet a hypothesis of the tail theorem.

    ``payload`` carries whatever diagnostics were gathered before the stop.
    """

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


class NotAPole(HypothesisFailure):
    """The rightmost real singularity is not a pole the analysis can use."""


class StripContaminated(HypothesisFailure):
    """Extra poles were found on the strip at every lambda in the ladder."""


class TooFewPoints(TailSpectraError):
    """Not enough points in the regression window."""


class Overflow(TailSpectraError, OverflowError):
    """The counterexample sequence left the exact-integer budget."""
