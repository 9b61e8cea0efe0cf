"""Market parameters, the square bubble, its potential and the r <-> alpha duality.

All times are time to maturity ``tau = T - t``. The bubble amplitude ``f0``
may be ``math.inf``, which denotes the strong-interaction limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import BubbleValueError, OutOfHorizon, SingularBubble, ZeroBubble

#: Relative distance to ``f0 == sigma`` below which the potential is refused.
POLE_EPS = 1e-9


@dataclass(frozen=True)
class MarketParams:
    r: float
    alpha: float
    sigma: float
    strike: float
    maturity: float

    def __post_init__(self) -> None:
        for name in ("r", "alpha", "sigma", "strike", "maturity"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise BubbleValueError(f"{name} must be a finite number, got {value!r}")
        if self.sigma <= 0:
            raise BubbleValueError(f"sigma must be > 0, got {self.sigma}")
        if self.strike <= 0:
            raise BubbleValueError(f"strike must be > 0, got {self.strike}")
        if self.maturity <= 0:
            raise BubbleValueError(f"maturity must be > 0, got {self.maturity}")

    def swapped(self) -> MarketParams:
        """The same market with ``r`` and ``alpha`` exchanged."""
        return replace(self, r=self.alpha, alpha=self.r)


@dataclass(frozen=True)
class SquareBubble:
    """Bubble of height ``f0`` active for ``tau1 <= tau < tau2``."""

    f0: float
    tau1: float
    tau2: float

    def __post_init__(self) -> None:
        if math.isnan(self.f0) or self.f0 == -math.inf:
            raise BubbleValueError(f"f0 must be a number or +inf, got {self.f0!r}")
        for name in ("tau1", "tau2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise BubbleValueError(f"{name} must be finite, got {value!r}")
        if not 0 <= self.tau1 <= self.tau2:
            raise BubbleValueError(
                f"need 0 <= tau1 <= tau2, got tau1={self.tau1}, tau2={self.tau2}"
            )

    @property
    def width(self) -> float:
        return self.tau2 - self.tau1

    def check_horizon(self, mp: MarketParams) -> None:
        if self.tau2 > mp.maturity:
            raise BubbleValueError(
                f"tau2={self.tau2} exceeds maturity T={mp.maturity}"
            )

    @classmethod
    def from_ratio(cls, h: float, sigma: float, tau1: float, tau2: float) -> SquareBubble:
        """Bubble with ``f0 = h * sigma``."""
        return cls(f0=h * sigma, tau1=tau1, tau2=tau2)

    @classmethod
    def from_dual_ratio(
        cls, h_star: float, sigma: float, tau1: float, tau2: float
    ) -> SquareBubble:
        """Bubble with ``f0 = sigma / h_star``; ``h_star == 0`` gives ``f0 = inf``."""
        f0 = math.inf if h_star == 0 else sigma / h_star
        return cls(f0=f0, tau1=tau1, tau2=tau2)


class Regime(enum.Enum):
    PRE_BUBBLE = "pre-bubble"
    IN_BUBBLE = "in-bubble"
    POST_BUBBLE = "post-bubble"


@dataclass(frozen=True)
class PotentialValue:
    v0: float
    v0_star: float
    h: float
    h_star: float


def _check_pole(mp: MarketParams, f0: float) -> None:
    if abs(f0 - mp.sigma) < POLE_EPS * mp.sigma:
        raise SingularBubble(
            f"f0={f0!r} is at the pole f0 = sigma = {mp.sigma} (h = f0/sigma = 1)"
        )


def potential_v0(mp: MarketParams, f0: float) -> float:
    """In-bubble potential ``(r - alpha) f0 / (sigma - f0)``.

    ``f0 = inf`` returns the limit ``-(r - alpha)``.
    """
    _check_pole(mp, f0)
    if f0 == 0 or mp.r == mp.alpha:
        return 0.0
    if math.isinf(f0):
        return -(mp.r - mp.alpha)
    return (mp.r - mp.alpha) * f0 / (mp.sigma - f0)


def potential_v0_star(mp: MarketParams, f0: float) -> float:
    """High-energy potential ``(r - alpha) sigma / (sigma - f0)``; tends to 0 as f0 grows."""
    _check_pole(mp, f0)
    if mp.r == mp.alpha or math.isinf(f0):
        return 0.0
    return (mp.r - mp.alpha) * mp.sigma / (mp.sigma - f0)


def dual_potential(mp: MarketParams, h_star: float) -> float:
    """``(alpha - r) h* / (1 - h*)`` written in terms of the dual ratio directly."""
    if abs(h_star - 1.0) < POLE_EPS:
        raise SingularBubble(f"h*={h_star!r} is at the pole h* = 1")
    if h_star == 0 or mp.r == mp.alpha:
        return 0.0
    return (mp.alpha - mp.r) * h_star / (1.0 - h_star)


def potential(mp: MarketParams, f0: float) -> PotentialValue:
    v0 = potential_v0(mp, f0)
    v0_star = potential_v0_star(mp, f0)
    h = f0 / mp.sigma
    h_star = math.inf if f0 == 0 else (0.0 if math.isinf(f0) else mp.sigma / f0)
    return PotentialValue(v0=v0, v0_star=v0_star, h=h, h_star=h_star)


def classify_regime(
    tau: float, bubble: SquareBubble, maturity: float | None = None
) -> Regime:
    """Regime of ``tau``: ``[0, tau1)`` pre, ``[tau1, tau2)`` in, ``[tau2, T]`` post.

    A zero-width bubble (``tau1 == tau2``) has no in-bubble window.
    """
    if tau < 0 or (maturity is not None and tau > maturity):
        raise OutOfHorizon(f"tau={tau} outside [0, {maturity if maturity is not None else 'T'}]")
    if tau < bubble.tau1:
        return Regime.PRE_BUBBLE
    if tau < bubble.tau2:
        return Regime.IN_BUBBLE
    return Regime.POST_BUBBLE


def dual_params(mp: MarketParams, bubble: SquareBubble) -> tuple[MarketParams, float]:
    """Apply ``r <-> alpha, h <-> h*``.

    Returns the swapped market and the dual ratio ``h* = sigma / f0``. Feeding
    ``SquareBubble.from_ratio(h*, ...)`` back in recovers the original rates
    bit for bit.
    """
    if bubble.f0 == 0:
        raise ZeroBubble("dual ratio h* = sigma/f0 is infinite for f0 = 0")
    h_star = 0.0 if math.isinf(bubble.f0) else mp.sigma / bubble.f0
    return mp.swapped(), h_star
