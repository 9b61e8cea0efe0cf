"""Exception hierarchy.

Validation problems derive from :class:`BubbleValueError`; numerical guards
that protect series sums and the PDE oracle derive from
:class:`NumericalGuard`. The CLI maps the first family to exit code 2 and
the second to exit code 3.
"""


class BubbleValueError(ValueError):
    """Invalid input (bad parameter, out-of-range argument)."""


class NumericalGuard(ArithmeticError):
    """A computation was refused because its result would be meaningless."""


class DomainError(BubbleValueError):
    """Spot or time outside the domain of the closed-form call."""


class OutOfHorizon(BubbleValueError):
    """Time to maturity outside ``[0, T]``."""


class ZeroBubble(BubbleValueError):
    """Dual quantities requested for ``f0 == 0`` (``h* = sigma / f0`` is infinite)."""


class OrderTooHigh(BubbleValueError):
    """Requested S-derivative order exceeds the configured cap."""


class QRangeError(BubbleValueError):
    """Argument of a resummation function outside the supported range."""


class GridTooCoarse(BubbleValueError):
    """PDE grid too coarse to serve as an oracle."""


class OutOfGrid(BubbleValueError):
    """Sample point outside a solved PDE grid."""


class CoefficientOverflow(OverflowError, BubbleValueError):
    """Exact integer coefficient exceeds 128-bit capacity."""


class SingularBubble(NumericalGuard):
    """Bubble amplitude at (or numerically at) the pole ``f0 == sigma``."""


class StiffRegime(NumericalGuard):
    """Potential too large for the PDE time step (``|v0| * dtau > 0.5``)."""
