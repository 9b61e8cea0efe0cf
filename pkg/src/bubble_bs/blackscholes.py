"""Closed-form Black-Scholes call and its S-derivatives to arbitrary order.

For ``n >= 2`` the derivatives share the form

    d^n C / dS^n = phi(d1) * S**(1 - n) * q_n(d1)

with ``q_2 = 1 / a`` (``a = sigma * sqrt(tau)``) and, since ``dd1/dS = 1/(S a)``
and ``phi' = -d phi``,

    q_{n+1}(d) = (1 - n) q_n(d) + (q_n'(d) - d q_n(d)) / a.

The polynomials are built once per ``a`` and evaluated by Horner's rule.
Functions accept scalars or numpy arrays for ``S``.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import ndtr

from .core import MarketParams
from .errors import DomainError, OrderTooHigh

DEFAULT_MAX_ORDER = 16
MAX_ORDER_ENV = "BUBBLE_BS_MAX_ORDER"

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class RateBasis(str, enum.Enum):
    """Which market rate parameterizes the closed form: ``r`` or the drift ``alpha``."""

    R = "r"
    ALPHA = "alpha"


def max_order() -> int:
    """Derivative-order cap, overridable through ``BUBBLE_BS_MAX_ORDER``."""
    raw = os.environ.get(MAX_ORDER_ENV)
    if raw is None:
        return DEFAULT_MAX_ORDER
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"{MAX_ORDER_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise DomainError(f"{MAX_ORDER_ENV} must be >= 0, got {value}")
    return value


def rate_value(mp: MarketParams, rate: RateBasis | str) -> float:
    return mp.alpha if RateBasis(rate) is RateBasis.ALPHA else mp.r


@dataclass(frozen=True)
class GreekVector:
    """``values[k] = d^k C / dS^k`` for ``k = 0..order`` at one ``(S, tau)``."""

    order: int
    values: tuple[float, ...]
    rate_used: RateBasis


@lru_cache(maxsize=256)
def _q_polys(n_max: int, a: float) -> tuple[np.ndarray, ...]:
    # coefficient arrays (ascending powers of d1) for q_2 .. q_n_max
    polys = []
    q = np.array([1.0 / a])
    for n in range(2, n_max + 1):
        polys.append(q)
        dq = npoly.polyder(q) if q.size > 1 else np.array([0.0])
        dq_minus_dq = npoly.polysub(dq, npoly.polymulx(q))
        q = npoly.polyadd((1 - n) * q, dq_minus_dq / a)
    return tuple(polys)


def _check_inputs(S, tau: float, n: int) -> np.ndarray:
    S_arr = np.asarray(S, dtype=float)
    if np.any(~(S_arr > 0)):
        raise DomainError(f"S must be > 0, got {S!r}")
    if not tau >= 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    if n >= 1 and tau == 0:
        raise DomainError("S-derivatives of order >= 1 need tau > 0 (distributional at expiry)")
    cap = max_order()
    if n > cap:
        raise OrderTooHigh(f"derivative order {n} exceeds cap {cap} (set {MAX_ORDER_ENV})")
    if n < 0:
        raise DomainError(f"derivative order must be >= 0, got {n}")
    return S_arr


def _derivatives(n_max: int, S: np.ndarray, tau: float, strike: float, sigma: float,
                 rate: float) -> np.ndarray:
    """Rows ``k = 0..n_max`` of ``d^k C / dS^k``; assumes validated inputs."""
    out = np.empty((n_max + 1,) + S.shape)
    if tau == 0:
        out[0] = np.maximum(S - strike, 0.0)
        return out
    a = sigma * math.sqrt(tau)
    d1 = (np.log(S / strike) + (rate + 0.5 * sigma * sigma) * tau) / a
    d2 = d1 - a
    out[0] = S * ndtr(d1) - strike * math.exp(-rate * tau) * ndtr(d2)
    if n_max >= 1:
        out[1] = ndtr(d1)
    if n_max >= 2:
        phi = _INV_SQRT_2PI * np.exp(-0.5 * d1 * d1)
        for n, q in enumerate(_q_polys(n_max, a), start=2):
            out[n] = phi * S ** (1 - n) * npoly.polyval(d1, q)
    return out


def call_price(S, tau: float, mp: MarketParams, rate: RateBasis | str = RateBasis.R):
    """Black-Scholes call at the selected rate; the payoff ``max(S - K, 0)`` at ``tau == 0``."""
    S_arr = _check_inputs(S, tau, 0)
    value = _derivatives(0, S_arr, tau, mp.strike, mp.sigma, rate_value(mp, rate))[0]
    return value if value.ndim else float(value)


def call_s_derivative(n: int, S, tau: float, mp: MarketParams,
                      rate: RateBasis | str = RateBasis.R):
    """``d^n C / dS^n``: price, Delta, Gamma, Speed, ... Requires ``tau > 0`` for ``n >= 1``."""
    S_arr = _check_inputs(S, tau, n)
    value = _derivatives(n, S_arr, tau, mp.strike, mp.sigma, rate_value(mp, rate))[n]
    return value if value.ndim else float(value)


def greek_table(n_max: int, S, tau: float, mp: MarketParams,
                rate: RateBasis | str = RateBasis.R) -> np.ndarray:
    """Array version of :func:`greek_vector`: shape ``(n_max + 1,) + shape(S)``."""
    S_arr = _check_inputs(S, tau, n_max)
    return _derivatives(n_max, S_arr, tau, mp.strike, mp.sigma, rate_value(mp, rate))


def greek_vector(n_max: int, S: float, tau: float, mp: MarketParams,
                 rate: RateBasis | str = RateBasis.R) -> GreekVector:
    values = greek_table(n_max, float(S), tau, mp, rate)
    return GreekVector(order=n_max, values=tuple(float(v) for v in values),
                       rate_used=RateBasis(rate))
