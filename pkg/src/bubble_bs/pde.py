"""Crank-Nicolson oracle for the interacting Black-Scholes equation in (S, tau).

    dpi/dtau = 1/2 sigma^2 S^2 pi_SS + (r + v(tau)) (S pi_S - pi)

marched forward from the payoff. Boundaries: ``pi = 0`` at ``s_min`` and
``pi_SS = 0`` at ``s_max``. Step counts are chosen per regime so the bubble
edges fall on step boundaries, and the first two steps are replaced by four
implicit half-steps (Rannacher start-up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import MarketParams, SquareBubble, dual_potential, potential_v0
from .errors import (
    BubbleValueError,
    GridTooCoarse,
    OutOfGrid,
    StiffRegime,
    ZeroBubble,
)

MIN_NODES = 50
STIFF_LIMIT = 0.5


@dataclass(frozen=True)
class GridConfig:
    n_s: int = 400
    n_tau: int = 400
    s_max: float | None = None  # default 4 * strike
    s_min: float = 0.0
    theta: float = 0.5
    rannacher_steps: int = 4
    log_spaced: bool = False

    def halved(self) -> GridConfig:
        return GridConfig(n_s=self.n_s // 2, n_tau=self.n_tau // 2, s_max=self.s_max,
                          s_min=self.s_min, theta=self.theta,
                          rannacher_steps=self.rannacher_steps, log_spaced=self.log_spaced)


@dataclass(frozen=True)
class PdeGrid:
    s: np.ndarray
    tau: np.ndarray
    surface: np.ndarray  # shape (len(tau), len(s))
    theta: float
    config: GridConfig = field(repr=False)

    @property
    def s_min(self) -> float:
        return float(self.s[0])

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def n_s(self) -> int:
        return len(self.s) - 1

    @property
    def n_tau(self) -> int:
        return len(self.tau) - 1


class ThomasSolver:
    """Tridiagonal solver ``a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i``.

    The elimination multipliers are computed once; :meth:`solve` only does
    the forward sweep on ``d`` and the back substitution.
    """

    def __init__(self, a, b, c):
        a = [float(v) for v in a]
        b = [float(v) for v in b]
        c = [float(v) for v in c]
        n = len(b)
        if not (len(a) == len(c) == n):
            raise BubbleValueError("tridiagonal bands must have equal length")
        cp = [0.0] * n
        inv = [0.0] * n
        denom = b[0]
        if denom == 0:
            raise ZeroDivisionError("zero pivot in Thomas elimination")
        inv[0] = 1.0 / denom
        cp[0] = c[0] * inv[0]
        for i in range(1, n):
            denom = b[i] - a[i] * cp[i - 1]
            if denom == 0:
                raise ZeroDivisionError("zero pivot in Thomas elimination")
            inv[i] = 1.0 / denom
            cp[i] = c[i] * inv[i]
        self._a, self._cp, self._inv, self.n = a, cp, inv, n

    def solve(self, d) -> np.ndarray:
        a, cp, inv, n = self._a, self._cp, self._inv, self.n
        d = [float(v) for v in d]
        dp = [0.0] * n
        dp[0] = d[0] * inv[0]
        for i in range(1, n):
            dp[i] = (d[i] - a[i] * dp[i - 1]) * inv[i]
        x = dp
        for i in range(n - 2, -1, -1):
            x[i] = dp[i] - cp[i] * x[i + 1]
        return np.array(x)


def _space_grid(mp: MarketParams, cfg: GridConfig) -> np.ndarray:
    s_max = 4.0 * mp.strike if cfg.s_max is None else cfg.s_max
    if not s_max > 3.0 * mp.strike:
        raise BubbleValueError(f"s_max={s_max} must exceed 3 * strike = {3 * mp.strike}")
    if cfg.log_spaced:
        s_min = cfg.s_min if cfg.s_min > 0 else mp.strike * math.exp(-5.0)
        return np.exp(np.linspace(math.log(s_min), math.log(s_max), cfg.n_s + 1))
    if cfg.s_min < 0 or cfg.s_min >= mp.strike:
        raise BubbleValueError(f"s_min={cfg.s_min} must lie in [0, strike)")
    return np.linspace(cfg.s_min, s_max, cfg.n_s + 1)


def _stencil(s: np.ndarray, sigma: float, rate: float):
    """Bands of ``L = 1/2 sigma^2 S^2 D^2 + rate (S D - I)`` at interior nodes."""
    h_lo = s[1:-1] - s[:-2]
    h_hi = s[2:] - s[1:-1]
    si = s[1:-1]
    diff = 0.5 * sigma * sigma * si * si
    conv = rate * si
    lo = diff * 2.0 / (h_lo * (h_lo + h_hi)) - conv * h_hi / (h_lo * (h_lo + h_hi))
    up = diff * 2.0 / (h_hi * (h_lo + h_hi)) + conv * h_lo / (h_hi * (h_lo + h_hi))
    mid = -diff * 2.0 / (h_lo * h_hi) + conv * (h_hi - h_lo) / (h_lo * h_hi) - rate
    return lo, mid, up


def _exact_coefficients(mp: MarketParams, f0: float, form: str) -> tuple[float, float, float]:
    """``(base, total inside, total outside)``, each total rounded once.

    Each form's total coefficient is evaluated in exact rational arithmetic
    from the float inputs, so the two forms yield bit-identical totals and
    differ only in how they split them into base rate and potential.
    """
    r, alpha, sigma = Fraction(mp.r), Fraction(mp.alpha), Fraction(mp.sigma)
    if form == "low":
        base = r
        if f0 == 0:
            total_in = r
        elif math.isinf(f0):
            total_in = alpha
        else:
            f = Fraction(f0)
            total_in = r + (r - alpha) * f / (sigma - f)
        total_out = r
    else:
        base = alpha
        h_star = Fraction(0) if math.isinf(f0) else sigma / Fraction(f0)
        total_in = alpha + (alpha - r) * h_star / (1 - h_star)
        total_out = alpha + (r - alpha)
    return float(base), float(total_in), float(total_out)


def _regime_schedule(mp: MarketParams, bubble: SquareBubble, base: float, inside: float,
                     outside: float, n_tau: int):
    """``(length, steps, coefficient, potential)`` per regime from total coefficients."""
    pieces = [
        (bubble.tau1, outside),
        (bubble.tau2 - bubble.tau1, inside),
        (mp.maturity - bubble.tau2, outside),
    ]
    out = []
    for length, coeff in pieces:
        if length <= 0:
            continue
        steps = max(1, math.ceil(n_tau * length / mp.maturity - 1e-9))
        out.append((length, steps, coeff, coeff - base))
    return out


def solve(mp: MarketParams, bubble: SquareBubble, config: GridConfig | None = None,
          form: str = "low") -> PdeGrid:
    """Solve the interacting equation on a grid.

    ``form="low"`` uses base rate ``r`` with potential ``v0`` inside the
    window and 0 outside. ``form="high"`` uses base rate ``alpha`` with
    ``v0*`` inside and ``r - alpha`` outside (``f = 0`` there). Both describe
    the same equation.
    """
    cfg = config or GridConfig()
    if cfg.n_s < MIN_NODES or cfg.n_tau < MIN_NODES:
        raise GridTooCoarse(f"grid {cfg.n_s}x{cfg.n_tau} below the {MIN_NODES}x{MIN_NODES} minimum")
    if not 0.0 <= cfg.theta <= 1.0:
        raise BubbleValueError(f"theta must lie in [0, 1], got {cfg.theta}")
    bubble.check_horizon(mp)
    if form == "low":
        potential_v0(mp, bubble.f0)  # pole guard
    elif form == "high":
        if bubble.f0 == 0:
            raise ZeroBubble("high-energy form needs f0 > 0")
        dual_potential(mp, 0.0 if math.isinf(bubble.f0) else mp.sigma / bubble.f0)
    else:
        raise BubbleValueError(f"form must be 'low' or 'high', got {form!r}")
    base, inside, outside = _exact_coefficients(mp, bubble.f0, form)

    s = _space_grid(mp, cfg)
    schedule = _regime_schedule(mp, bubble, base, inside, outside, cfg.n_tau)
    for length, steps, _, pot in schedule:
        if abs(pot) * length / steps > STIFF_LIMIT:
            raise StiffRegime(
                f"|potential| * dtau = {abs(pot) * length / steps:.3g} exceeds {STIFF_LIMIT}; "
                "refine n_tau or move away from h = 1"
            )

    V = np.maximum(s - mp.strike, 0.0)
    taus = [0.0]
    rows = [V.copy()]
    # top row: V_N = w1 V_{N-1} - w2 V_{N-2} (zero second derivative)
    h1, h2 = s[-1] - s[-2], s[-2] - s[-3]
    w1, w2 = 1.0 + h1 / h2, h1 / h2

    cache: dict[tuple[float, float], ThomasSolver] = {}

    def step(V: np.ndarray, lo, mid, up, dt: float, theta: float) -> np.ndarray:
        key = (dt, theta)
        a = -theta * dt * lo
        b = 1.0 - theta * dt * mid
        c = -theta * dt * up
        if key not in cache:
            b_mod, a_mod = b.copy(), a.copy()
            # fold the boundary relation into the last interior row
            b_mod[-1] += w1 * c[-1]
            a_mod[-1] -= w2 * c[-1]
            c_mod = c.copy()
            c_mod[-1] = 0.0
            cache[key] = ThomasSolver(a_mod, b_mod, c_mod)
        interior = V[1:-1]
        rhs = interior + (1.0 - theta) * dt * (lo * V[:-2] + mid * interior + up * V[2:])
        W = np.empty_like(V)
        W[0] = 0.0
        W[1:-1] = cache[key].solve(rhs)
        W[-1] = w1 * W[-2] - w2 * W[-3]
        return W

    start = 0.0
    done = 0
    startup = max(0, cfg.rannacher_steps)
    for length, steps, coeff, _ in schedule:
        lo, mid, up = _stencil(s, mp.sigma, coeff)
        cache.clear()
        dt = length / steps
        for k in range(steps):
            if done * 2 < startup:
                # two implicit half-steps replace one theta step
                V = step(V, lo, mid, up, dt / 2.0, 1.0)
                V = step(V, lo, mid, up, dt / 2.0, 1.0)
            else:
                V = step(V, lo, mid, up, dt, cfg.theta)
            done += 1
            taus.append(start + length * (k + 1) / steps)
            rows.append(V.copy())
        start += length

    surface = np.array(rows)
    tau_arr = np.array(taus)
    for arr in (s, surface, tau_arr):
        arr.setflags(write=False)
    return PdeGrid(s=s, tau=tau_arr, surface=surface, theta=cfg.theta, config=cfg)


def sample(grid: PdeGrid, S: float, tau: float) -> float:
    """Bilinear interpolation of the surface; exact at nodes."""
    s, t = grid.s, grid.tau
    if not (s[0] <= S <= s[-1]) or not (t[0] - 1e-12 <= tau <= t[-1] + 1e-12):
        raise OutOfGrid(f"(S={S}, tau={tau}) outside [{s[0]}, {s[-1]}] x [{t[0]}, {t[-1]}]")
    i = int(np.clip(np.searchsorted(s, S, side="right") - 1, 0, len(s) - 2))
    j = int(np.clip(np.searchsorted(t, tau, side="right") - 1, 0, len(t) - 2))
    ws = (S - s[i]) / (s[i + 1] - s[i])
    wt = min(max((tau - t[j]) / (t[j + 1] - t[j]), 0.0), 1.0)
    U = grid.surface
    if ws == 0.0 and wt == 0.0:
        return float(U[j, i])
    lower = (1 - ws) * U[j, i] + ws * U[j, i + 1]
    upper = (1 - ws) * U[j + 1, i] + ws * U[j + 1, i + 1]
    return float((1 - wt) * lower + wt * upper)


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    coarse_value: float
    error_estimate: float  # |fine - coarse| / 3 for a second-order scheme


def richardson(mp: MarketParams, bubble: SquareBubble, S: float, tau: float,
               config: GridConfig | None = None, fine: PdeGrid | None = None) -> OracleEstimate:
    """Oracle value at ``(S, tau)`` with its self-error from a half-resolution solve."""
    cfg = config or GridConfig()
    fine = fine if fine is not None else solve(mp, bubble, cfg)
    coarse = solve(mp, bubble, cfg.halved())
    vf, vc = sample(fine, S, tau), sample(coarse, S, tau)
    return OracleEstimate(value=vf, coarse_value=vc, error_estimate=abs(vf - vc) / 3.0)
