import math

import pytest
from hypothesis import given, strategies as st

from bubble_bs.core import (
    MarketParams,
    Regime,
    SquareBubble,
    classify_regime,
    dual_params,
    potential,
    potential_v0,
    potential_v0_star,
)
from bubble_bs.errors import BubbleValueError, OutOfHorizon, SingularBubble, ZeroBubble

FIG3 = dict(r=0.2, alpha=0.8)


@pytest.fixture
def mp():
    return MarketParams(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0)


@pytest.fixture
def bubble():
    return SquareBubble(f0=0.1, tau1=0.25, tau2=0.75)


rates = st.floats(-0.5, 1.0, allow_nan=False)
sigmas = st.floats(0.05, 1.5)
ratios = st.floats(0.0, 50.0).filter(lambda h: abs(h - 1.0) > 1e-3)


@pytest.mark.parametrize("kwargs", [
    dict(sigma=0.0), dict(sigma=-0.1), dict(strike=0.0), dict(maturity=0.0),
    dict(r=math.nan), dict(alpha=math.inf),
])
def test_market_params_validation(kwargs):
    base = dict(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0)
    base.update(kwargs)
    with pytest.raises(BubbleValueError):
        MarketParams(**base)


def test_r_equal_alpha_is_allowed():
    mp = MarketParams(r=0.3, alpha=0.3, sigma=0.4, strike=100.0, maturity=1.0)
    assert potential_v0(mp, 0.1) == 0.0
    assert potential_v0_star(mp, 0.1) == 0.0


def test_bubble_window_validation(mp):
    with pytest.raises(BubbleValueError):
        SquareBubble(f0=0.1, tau1=0.5, tau2=0.4)
    with pytest.raises(BubbleValueError):
        SquareBubble(f0=0.1, tau1=-0.1, tau2=0.4)
    with pytest.raises(BubbleValueError):
        SquareBubble(f0=0.1, tau1=0.1, tau2=1.5).check_horizon(mp)


def test_potential_examples(mp):
    assert potential_v0(mp, 0.0) == 0.0
    assert potential_v0(mp, mp.sigma / 2) == pytest.approx(-0.6, abs=1e-15)
    with pytest.raises(SingularBubble):
        potential_v0(mp, mp.sigma * (1 - 1e-14))
    with pytest.raises(SingularBubble):
        potential_v0_star(mp, mp.sigma)


def test_v0_star_examples(mp):
    assert potential_v0_star(mp, 0.0) == pytest.approx(mp.r - mp.alpha, rel=1e-15)
    assert abs(potential_v0_star(mp, 1e12 * mp.sigma)) < 1e-11
    assert potential_v0_star(mp, math.inf) == 0.0


def test_infinite_bubble_limit(mp):
    assert potential_v0(mp, math.inf) == -(mp.r - mp.alpha)
    big = potential_v0(mp, 1e6 * mp.sigma)
    assert big == pytest.approx(-(mp.r - mp.alpha), rel=1e-5)


@given(r=rates, alpha=rates, sigma=sigmas, h=ratios)
def test_dual_level_differs_by_rate_gap(r, alpha, sigma, h):
    mp = MarketParams(r=r, alpha=alpha, sigma=sigma, strike=1.0, maturity=1.0)
    f0 = h * sigma
    gap = potential_v0_star(mp, f0) - potential_v0(mp, f0)
    scale = max(abs(r - alpha), abs(potential_v0(mp, f0)), 1e-300)
    assert abs(gap - (r - alpha)) <= 1e-12 * scale


@given(r=rates, alpha=rates, sigma=sigmas, h=ratios)
def test_effective_rate_conserved(r, alpha, sigma, h):
    mp = MarketParams(r=r, alpha=alpha, sigma=sigma, strike=1.0, maturity=1.0)
    f0 = h * sigma
    low = r + potential_v0(mp, f0)
    high = alpha + potential_v0_star(mp, f0)
    closed = (r * sigma - alpha * f0) / (sigma - f0)
    scale = max(abs(r), abs(alpha), abs(low), 1e-12)
    assert abs(low - high) <= 1e-12 * scale
    assert abs(low - closed) <= 1e-12 * scale


@given(sigma=sigmas, h=st.floats(0.01, 0.99))
def test_sign_structure(sigma, h):
    mp = MarketParams(r=0.8, alpha=0.2, sigma=sigma, strike=1.0, maturity=1.0)
    assert potential_v0(mp, h * sigma) > 0
    assert potential_v0(mp, (2.0 - h) * sigma + 1e-6) < 0


def test_potential_value_bundle(mp):
    pv = potential(mp, 0.1)
    assert pv.h == pytest.approx(0.25)
    assert pv.h_star == pytest.approx(4.0)
    assert pv.v0_star - pv.v0 == pytest.approx(mp.r - mp.alpha, rel=1e-12)
    assert potential(mp, 0.0).h_star == math.inf


def test_classify_regime_examples(mp, bubble):
    t1, t2, T = bubble.tau1, bubble.tau2, mp.maturity
    assert classify_regime(t1 / 2, bubble, T) is Regime.PRE_BUBBLE
    assert classify_regime((t1 + t2) / 2, bubble, T) is Regime.IN_BUBBLE
    assert classify_regime(t2 + (T - t2) / 2, bubble, T) is Regime.POST_BUBBLE
    assert classify_regime(t1, bubble, T) is Regime.IN_BUBBLE
    assert classify_regime(t2, bubble, T) is Regime.POST_BUBBLE
    assert classify_regime(0.0, bubble, T) is Regime.PRE_BUBBLE
    assert classify_regime(T, bubble, T) is Regime.POST_BUBBLE
    with pytest.raises(OutOfHorizon):
        classify_regime(-1e-9, bubble, T)
    with pytest.raises(OutOfHorizon):
        classify_regime(T + 1e-9, bubble, T)


@given(taus=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30))
def test_classify_regime_is_monotone(taus):
    order = [Regime.PRE_BUBBLE, Regime.IN_BUBBLE, Regime.POST_BUBBLE]
    b = SquareBubble(f0=0.1, tau1=0.25, tau2=0.75)
    ranks = [order.index(classify_regime(t, b, 1.0)) for t in sorted(taus)]
    assert ranks == sorted(ranks)


def test_dual_params_example(mp):
    bubble = SquareBubble.from_ratio(0.5, mp.sigma, 0.25, 0.75)
    dual_mp, h_star = dual_params(mp, bubble)
    assert (dual_mp.r, dual_mp.alpha) == (0.8, 0.2)
    assert h_star == 2.0


@given(r=rates, alpha=rates, h=st.floats(0.01, 20.0))
def test_dual_is_an_involution_on_rates(r, alpha, h):
    mp = MarketParams(r=r, alpha=alpha, sigma=0.4, strike=100.0, maturity=1.0)
    b = SquareBubble.from_ratio(h, mp.sigma, 0.0, 1.0)
    mp1, hs = dual_params(mp, b)
    mp2, _ = dual_params(mp1, SquareBubble.from_ratio(hs, mp1.sigma, 0.0, 1.0))
    assert (mp2.r, mp2.alpha) == (mp.r, mp.alpha)
    assert mp2 == mp


def test_dual_requires_nonzero_bubble(mp):
    with pytest.raises(ZeroBubble):
        dual_params(mp, SquareBubble(0.0, 0.25, 0.75))


def test_dual_potential_identity_hand_value():
    # (r sigma - alpha f0) / (sigma - f0) = (0.08 - 0.08) / 0.3 = 0
    mp = MarketParams(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0)
    f0 = 0.1
    low = mp.r + potential_v0(mp, f0)
    dual_mp, h_star = dual_params(mp, SquareBubble(f0, 0.0, 1.0))
    # v0* computed from the dual market with amplitude h* sigma
    high = mp.alpha + potential_v0(dual_mp, h_star * mp.sigma)
    assert abs(low) <= 1e-15
    assert abs(high) <= 1e-15
    assert abs(mp.alpha + potential_v0_star(mp, f0)) <= 1e-15
