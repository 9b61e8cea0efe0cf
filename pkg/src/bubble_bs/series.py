"""Series prices for a call under a square bubble.

Inside the window the price is ``exp(x P) C(S, tau)`` with the elapsed
interaction ``x = v0 * clock(tau)``; after the window the clock freezes at
``tau2 - tau1`` while C keeps the current ``tau``. Expanding
``exp(x P) = exp(-x) sum_n Q_n(x) S^n D^n`` gives a series in the Greeks;
every method below is a choice of weights on ``S^n d^n C / dS^n``.

The dual ("high-energy") methods use ``v0*`` and the closed form at rate
``alpha``. They reproduce the low-energy price exactly only where the PDE
coefficient is ``alpha + v0*`` for the whole elapsed time, i.e. for a bubble
starting at ``tau1 = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .blackscholes import RateBasis, greek_table, max_order
from .core import (
    MarketParams,
    Regime,
    SquareBubble,
    classify_regime,
    dual_potential,
    potential_v0,
)
from .errors import BubbleValueError, DomainError, OrderTooHigh, ZeroBubble
from .operators import q_function, triangle

DEFAULT_N_MAX = 12


class Method(str, enum.Enum):
    PERTURB3 = "perturb3"
    EXACT = "exact"
    TRUNC3 = "trunc3"
    DUAL_EXACT = "dual-exact"
    DUAL_TRUNC3 = "dual-trunc3"

    @property
    def is_dual(self) -> bool:
        return self in (Method.DUAL_EXACT, Method.DUAL_TRUNC3)


@dataclass(frozen=True)
class Term:
    order: int
    weight: float
    greek: float  # S^n d^n C / dS^n
    contribution: float


@dataclass(frozen=True)
class SeriesQuote:
    price: float
    regime: Regime
    terms: tuple[Term, ...]
    method: Method
    n_max: int
    rate_basis: RateBasis
    x: float

    def to_dict(self) -> dict:
        return {
            "price": self.price,
            "regime": self.regime.value,
            "method": self.method.value,
            "n_max": self.n_max,
            "rate_basis": self.rate_basis.value,
            "x": self.x,
            "terms": [
                {"order": t.order, "weight": t.weight, "contribution": t.contribution}
                for t in self.terms
            ],
        }


def interaction_clock(tau: float, bubble: SquareBubble, maturity: float | None = None) -> float:
    """Elapsed in-bubble time: 0 before, ``tau - tau1`` inside, ``tau2 - tau1`` after."""
    regime = classify_regime(tau, bubble, maturity)
    if regime is Regime.PRE_BUBBLE:
        return 0.0
    if regime is Regime.IN_BUBBLE:
        return tau - bubble.tau1
    return bubble.tau2 - bubble.tau1


def perturb3_weights(x: float) -> list[float]:
    x2, x3 = x * x / 2.0, x**3 / 6.0
    return [1.0 - x + x2 - x3, x - x2 + x3, x2, x3]


def exact_weights(x: float, n_max: int) -> list[float]:
    e = math.exp(-x)
    weights = [e, -math.expm1(-x)]
    weights += [e * q_function(n, x) for n in range(2, n_max + 1)]
    return weights[: n_max + 1]


def trunc3_weights(x: float) -> list[float]:
    e = math.exp(-x)
    a32 = triangle(3)[3, 2]
    q2 = x * x / 2.0 + a32 * x**3 / 6.0
    q3 = x**3 / 6.0
    return [e, -math.expm1(-x), e * q2, e * q3]


def _coupling(mp: MarketParams, bubble: SquareBubble, method: Method) -> tuple[float, RateBasis]:
    if method.is_dual:
        if bubble.f0 == 0:
            raise ZeroBubble("dual methods need f0 > 0 (h* = sigma/f0 is infinite at f0 = 0)")
        h_star = 0.0 if math.isinf(bubble.f0) else mp.sigma / bubble.f0
        return dual_potential(mp, h_star), RateBasis.ALPHA
    return potential_v0(mp, bubble.f0), RateBasis.R


def _weights(method: Method, x: float, n_max: int) -> list[float]:
    if method is Method.PERTURB3:
        return perturb3_weights(x)
    if method in (Method.TRUNC3, Method.DUAL_TRUNC3):
        return trunc3_weights(x)
    return exact_weights(x, n_max)


def _resolve_n_max(method: Method, n_max: int | None) -> int:
    if method in (Method.EXACT, Method.DUAL_EXACT):
        n = DEFAULT_N_MAX if n_max is None else n_max
        if n < 1:
            raise BubbleValueError(f"n_max must be >= 1, got {n}")
        cap = max_order()
        if n > cap:
            raise OrderTooHigh(f"n_max={n} exceeds the derivative-order cap {cap}")
        return n
    return 3


def _series_terms(S, tau: float, mp: MarketParams, bubble: SquareBubble, method: Method,
                  n_max: int | None):
    """Weights and ``S^n d^n C`` rows for an array of spots at one ``tau``."""
    method = Method(method)
    bubble.check_horizon(mp)
    n = _resolve_n_max(method, n_max)
    v, basis = _coupling(mp, bubble, method)
    regime = classify_regime(tau, bubble, mp.maturity)
    x = v * interaction_clock(tau, bubble, mp.maturity)
    S_arr = np.asarray(S, dtype=float)
    if regime is Regime.PRE_BUBBLE or tau == 0 or x == 0:
        weights = [1.0]
    else:
        weights = _weights(method, x, n)
    order = len(weights) - 1
    greeks = greek_table(order, S_arr, tau, mp, basis)
    powers = S_arr ** np.arange(order + 1).reshape((-1,) + (1,) * S_arr.ndim)
    return regime, x, n, basis, weights, greeks * powers


def price_curve(S, tau: float, mp: MarketParams, bubble: SquareBubble,
                method: Method | str = Method.EXACT, n_max: int | None = None) -> np.ndarray:
    """Vectorized price over spots at one ``tau``. ``S == 0`` prices to 0."""
    S_arr = np.atleast_1d(np.asarray(S, dtype=float))
    if np.any(S_arr < 0):
        raise DomainError("S must be >= 0")
    out = np.zeros_like(S_arr)
    live = S_arr > 0
    if np.any(live):
        _, _, _, _, weights, greeks = _series_terms(S_arr[live], tau, mp, bubble, method, n_max)
        total = np.zeros(int(live.sum()))
        for k in range(len(weights) - 1, -1, -1):
            total = total + weights[k] * greeks[k]
        out[live] = total
    return out


def quote(S: float, tau: float, mp: MarketParams, bubble: SquareBubble,
          method: Method | str = Method.EXACT, n_max: int | None = None) -> SeriesQuote:
    """Price one ``(S, tau)`` point with a per-order breakdown."""
    method = Method(method)
    regime, x, n, basis, weights, greeks = _series_terms(float(S), tau, mp, bubble, method, n_max)
    terms = tuple(
        Term(order=k, weight=w, greek=float(g), contribution=w * float(g))
        for k, (w, g) in enumerate(zip(weights, greeks))
    )
    price = 0.0
    for t in reversed(terms):
        price += t.contribution
    return SeriesQuote(price=price, regime=regime, terms=terms, method=method,
                       n_max=n, rate_basis=basis, x=x)


def perturbative_order3(S: float, tau: float, mp: MarketParams, bubble: SquareBubble) -> SeriesQuote:
    """Cubic perturbation series in ``C, S Delta, S^2 Gamma, S^3 Speed``."""
    return quote(S, tau, mp, bubble, Method.PERTURB3)


def exact_series(S: float, tau: float, mp: MarketParams, bubble: SquareBubble,
                 n_max: int = DEFAULT_N_MAX) -> SeriesQuote:
    """``exp(-x) sum_{n<=n_max} Q_n(x) S^n d^n C`` with the first two weights in closed form."""
    return quote(S, tau, mp, bubble, Method.EXACT, n_max)


def truncated_order3(S: float, tau: float, mp: MarketParams, bubble: SquareBubble) -> SeriesQuote:
    """Exact prefactor ``exp(-x)``, ``Q_2`` and ``Q_3`` cut at ``x^3``, ``Q_{j>3}`` dropped."""
    return quote(S, tau, mp, bubble, Method.TRUNC3)


def dual_quote(S: float, tau: float, mp: MarketParams, bubble: SquareBubble,
               method: Method | str = Method.DUAL_EXACT,
               n_max: int = DEFAULT_N_MAX) -> SeriesQuote:
    """High-energy form: ``v0*`` in place of ``v0`` and Greeks at rate ``alpha``.

    ``method`` may name either the dual method or its low-energy counterpart.
    """
    method = Method(method)
    counterpart = {Method.EXACT: Method.DUAL_EXACT, Method.TRUNC3: Method.DUAL_TRUNC3}
    method = counterpart.get(method, method)
    if not method.is_dual:
        raise BubbleValueError(f"no high-energy form for method {method.value}")
    return quote(S, tau, mp, bubble, method, n_max)
