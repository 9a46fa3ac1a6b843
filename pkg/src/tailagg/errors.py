"""Semantic exceptions shared across the package."""


class TailAggError(Exception):
    """Base class for all package-specific errors."""


class NonStabilizingRatio(TailAggError):
    """Numeric tail-ratio probe did not settle on the probe grid.

    Signals tail non-equivalence (the limit may be infinite, or convergence
    is too slow for the probe); the caller should pass the heavier marginal
    first or supply the constant analytically.
    """


class HeavierLaterTail(TailAggError):
    """A tail-ratio probe diverged upward: a later model is heavier than the first."""


class ZeroTailRatio(TailAggError):
    """A tail-ratio constant came out 0 where the recipe requires it positive."""


class AuxiliaryUnavailable(TailAggError):
    """No closed-form auxiliary function is tabulated for this model."""


class AuxiliaryNotDiverging(TailAggError):
    """The operation requires an auxiliary function with f(x) -> infinity."""


class UnsupportedKind(TailAggError):
    """The joint-model kind has no closed form for the requested quantity."""


class InfeasibleConstraint(TailAggError):
    """No feasible allocation satisfies the portfolio constraint."""


class UnsupportedConstraint(TailAggError):
    """The constraint shape is outside what the solver handles."""


class NearTieWarning(UserWarning):
    """Two coefficients differ by less than 1e-12 relative.

    Argmax ties are resolved by exact float equality; almost-equal
    coefficients silently change the tie count. Pass bit-equal values if a
    tie is intended.
    """
