import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubble_bs.blackscholes import RateBasis, call_price, greek_table
from bubble_bs.core import MarketParams, Regime, SquareBubble, potential_v0
from bubble_bs.errors import BubbleValueError, DomainError, OrderTooHigh, ZeroBubble
from bubble_bs.series import (
    Method,
    dual_quote,
    exact_series,
    exact_weights,
    interaction_clock,
    perturb3_weights,
    perturbative_order3,
    price_curve,
    quote,
    trunc3_weights,
    truncated_order3,
)

MP = MarketParams(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0)
BUBBLE = SquareBubble.from_ratio(0.4, MP.sigma, 0.25, 0.75)
LOW_METHODS = [Method.PERTURB3, Method.EXACT, Method.TRUNC3]


def dressed(mp, v):
    return MarketParams(r=mp.r + v, alpha=mp.alpha, sigma=mp.sigma, strike=mp.strike,
                        maturity=mp.maturity)


def test_interaction_clock():
    assert interaction_clock(0.1, BUBBLE, 1.0) == 0.0
    assert interaction_clock(0.5, BUBBLE, 1.0) == pytest.approx(0.25)
    assert interaction_clock(0.9, BUBBLE, 1.0) == pytest.approx(0.5)


@settings(max_examples=100)
@given(S=st.floats(10.0, 400.0), tau=st.floats(0.0, 1.0), method=st.sampled_from(LOW_METHODS))
def test_zero_bubble_is_free_call(S, tau, method):
    b = SquareBubble(0.0, 0.25, 0.75)
    assert quote(S, tau, MP, b, method).price == call_price(S, tau, MP)


@settings(max_examples=100)
@given(S=st.floats(10.0, 400.0), tau=st.floats(0.0, 1.0), method=st.sampled_from(list(Method)))
def test_equal_rates_is_free_call(S, tau, method):
    mp = MarketParams(r=0.3, alpha=0.3, sigma=0.4, strike=100.0, maturity=1.0)
    b = SquareBubble.from_ratio(0.4, mp.sigma, 0.25, 0.75)
    want = call_price(S, tau, mp)
    assert abs(quote(S, tau, mp, b, method).price - want) <= 1e-14 * max(want, 1e-300)


def test_weight_polynomials():
    x = 0.3
    assert perturb3_weights(x) == pytest.approx(
        [1 - x + x**2 / 2 - x**3 / 6, x - x**2 / 2 + x**3 / 6, x**2 / 2, x**3 / 6], rel=1e-15)
    e = math.exp(-x)
    assert trunc3_weights(x) == pytest.approx(
        [e, 1 - e, e * (x**2 / 2 + x**3 / 2), e * x**3 / 6], rel=1e-15)
    w = exact_weights(x, 12)
    assert w[2] == pytest.approx(e * math.expm1(x) ** 2 / 2, rel=1e-15)
    assert w[5] == pytest.approx(e * math.expm1(x) ** 5 / 120, rel=1e-14)


@given(x=st.floats(-1.0, 1.0))
def test_exact_weights_resum_to_one_on_constant(x):
    # exp(x P) applied to S^1 leaves it unchanged: sum_n w_n * (1)_n = w_0 + w_1 = 1
    w = exact_weights(x, 12)
    assert w[0] + w[1] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("method", LOW_METHODS)
@pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
def test_price_is_sum_of_terms(method, tau):
    q = quote(97.0, tau, MP, BUBBLE, method)
    assert q.price == pytest.approx(sum(t.contribution for t in q.terms), rel=1e-15)
    for t in q.terms:
        assert t.contribution == t.weight * t.greek


def test_terms_use_closed_form_greeks():
    q = exact_series(97.0, 0.5, MP, BUBBLE, n_max=6)
    g = greek_table(6, 97.0, 0.5, MP)
    for t in q.terms:
        assert t.greek == pytest.approx(97.0**t.order * g[t.order], rel=1e-15)


def test_pre_bubble_is_single_free_term():
    q = exact_series(100.0, 0.1, MP, BUBBLE)
    assert q.regime is Regime.PRE_BUBBLE
    assert len(q.terms) == 1
    assert q.price == call_price(100.0, 0.1, MP)


def test_quote_metadata_and_dict():
    q = truncated_order3(100.0, 0.5, MP, BUBBLE)
    assert q.regime is Regime.IN_BUBBLE and q.method is Method.TRUNC3 and q.n_max == 3
    assert q.rate_basis is RateBasis.R
    assert q.x == pytest.approx(potential_v0(MP, BUBBLE.f0) * 0.25)
    d = q.to_dict()
    assert d["regime"] == "in-bubble" and len(d["terms"]) == 4


@pytest.mark.parametrize("h", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("S", [70.0, 100.0, 140.0])
def test_full_horizon_bubble_is_free_call_at_dressed_rate(h, S):
    b = SquareBubble.from_ratio(h, MP.sigma, 0.0, 1.0)
    want = call_price(S, 1.0, dressed(MP, potential_v0(MP, b.f0)))
    assert exact_series(S, 1.0, MP, b).price == pytest.approx(want, rel=1e-10)


def test_exact_series_converges_in_n_max():
    b = SquareBubble.from_ratio(0.2, MP.sigma, 0.0, 1.0)
    want = call_price(100.0, 1.0, dressed(MP, potential_v0(MP, b.f0)))
    errs = [abs(exact_series(100.0, 1.0, MP, b, n_max=n).price - want) for n in (2, 4, 8, 12)]
    assert errs[-1] < errs[0] * 1e-4


@pytest.mark.parametrize("x", [1e-3, 1e-2])
def test_perturbative_agrees_with_exact_to_fourth_order(x):
    v = potential_v0(MP, BUBBLE.f0)
    tau = BUBBLE.tau1 + x / abs(v)
    S = 100.0
    p = perturbative_order3(S, tau, MP, BUBBLE).price
    e = exact_series(S, tau, MP, BUBBLE).price
    assert abs(p - e) <= 50.0 * x**4 * e


def test_truncation_residual_is_quartic():
    mp = MarketParams(r=0.2, alpha=0.8, sigma=0.4, strike=100.0, maturity=1.0)
    b = SquareBubble.from_ratio(0.4, mp.sigma, 0.0, 1.0)
    gaps = []
    for tau in (0.4, 0.2, 0.1):
        gaps.append(abs(truncated_order3(100.0, tau, mp, b).price
                        - exact_series(100.0, tau, mp, b).price))
    # halving x = v0 tau also changes the Greeks; compare through the weights instead
    v = potential_v0(mp, b.f0)
    g = greek_table(5, 100.0, 0.5, mp) * 100.0 ** np.arange(6)
    resid = []
    for x in (0.2 * v, 0.1 * v):
        w_t, w_e = trunc3_weights(x), exact_weights(x, 12)
        resid.append(abs(sum((w_e[k] - (w_t[k] if k < 4 else 0.0)) * g[k] for k in range(6))))
    assert 12 <= resid[0] / resid[1] <= 20
    assert all(np.isfinite(gaps))


@pytest.mark.parametrize("method", LOW_METHODS)
@pytest.mark.parametrize("edge", ["tau1", "tau2"])
def test_regime_continuity(method, edge):
    t = getattr(BUBBLE, edge)
    lo = quote(100.0, t - 1e-9, MP, BUBBLE, method).price
    hi = quote(100.0, t + 1e-9, MP, BUBBLE, method).price
    assert abs(hi - lo) <= 1e-8 * abs(lo)


@pytest.mark.parametrize("h", [3.0, 5.0, 20.0])
def test_dual_form_matches_dressed_rate_for_full_horizon_bubble(h):
    # strong bubbles: |x*| is small where |x| is not
    b = SquareBubble.from_ratio(h, MP.sigma, 0.0, 1.0)
    want = call_price(100.0, 0.6, dressed(MP, potential_v0(MP, b.f0)))
    q = dual_quote(100.0, 0.6, MP, b)
    assert q.rate_basis is RateBasis.ALPHA and q.method is Method.DUAL_EXACT
    assert q.price == pytest.approx(want, rel=1e-8)


def test_dual_form_beats_low_form_for_strong_bubble():
    b = SquareBubble.from_ratio(3.0, MP.sigma, 0.0, 1.0)
    want = call_price(100.0, 0.6, dressed(MP, potential_v0(MP, b.f0)))
    low = abs(exact_series(100.0, 0.6, MP, b).price - want)
    high = abs(dual_quote(100.0, 0.6, MP, b).price - want)
    assert high < 1e-3 * low


def test_dual_series_with_infinite_bubble_is_free_call_at_alpha():
    b = SquareBubble.from_dual_ratio(0.0, MP.sigma, 0.0, 1.0)
    assert dual_quote(100.0, 0.7, MP, b).price == call_price(100.0, 0.7, MP.swapped())
    b = SquareBubble.from_dual_ratio(1e-6, MP.sigma, 0.0, 1.0)
    want = call_price(100.0, 1.0, MP.swapped())
    assert dual_quote(100.0, 1.0, MP, b).price == pytest.approx(want, rel=1e-6)


def test_dual_counterpart_mapping():
    b = SquareBubble.from_ratio(2.0, MP.sigma, 0.0, 1.0)
    assert dual_quote(100.0, 0.5, MP, b, "trunc3").method is Method.DUAL_TRUNC3
    with pytest.raises(BubbleValueError):
        dual_quote(100.0, 0.5, MP, b, "perturb3")
    with pytest.raises(ZeroBubble):
        dual_quote(100.0, 0.5, MP, SquareBubble(0.0, 0.0, 1.0))


def test_n_max_validation():
    with pytest.raises(OrderTooHigh):
        exact_series(100.0, 0.5, MP, BUBBLE, n_max=17)
    with pytest.raises(BubbleValueError):
        exact_series(100.0, 0.5, MP, BUBBLE, n_max=0)


def test_price_curve_matches_quotes():
    S = np.array([0.0, 50.0, 100.0, 150.0])
    for method in LOW_METHODS:
        curve = price_curve(S, 0.5, MP, BUBBLE, method)
        assert curve[0] == 0.0
        for s, c in zip(S[1:], curve[1:]):
            assert c == pytest.approx(quote(s, 0.5, MP, BUBBLE, method).price, rel=1e-13)
    with pytest.raises(DomainError):
        price_curve([-1.0], 0.5, MP, BUBBLE)
