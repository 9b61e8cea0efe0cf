"""European call pricing under a Black-Scholes equation perturbed by a square arbitrage bubble."""

from .blackscholes import (
    GreekVector,
    RateBasis,
    call_price,
    call_s_derivative,
    greek_table,
    greek_vector,
)
from .core import (
    MarketParams,
    PotentialValue,
    Regime,
    SquareBubble,
    classify_regime,
    dual_params,
    potential,
    potential_v0,
    potential_v0_star,
)
from .errors import (
    BubbleValueError,
    CoefficientOverflow,
    DomainError,
    GridTooCoarse,
    NumericalGuard,
    OrderTooHigh,
    OutOfGrid,
    OutOfHorizon,
    QRangeError,
    SingularBubble,
    StiffRegime,
    ZeroBubble,
)
from .operators import (
    CoeffTriangle,
    QFunctionSet,
    apply_K_power_to_monomial,
    p_power_coeffs,
    q_function,
    triangle,
)
from .pde import GridConfig, PdeGrid, richardson, sample, solve
from .series import (
    Method,
    SeriesQuote,
    dual_quote,
    exact_series,
    interaction_clock,
    perturbative_order3,
    price_curve,
    quote,
    truncated_order3,
)

__version__ = "0.1.0"

__all__ = [
    "GridConfig",
    "PdeGrid",
    "richardson",
    "sample",
    "solve",
    "BubbleValueError",
    "CoeffTriangle",
    "CoefficientOverflow",
    "DomainError",
    "GreekVector",
    "GridTooCoarse",
    "MarketParams",
    "Method",
    "NumericalGuard",
    "OrderTooHigh",
    "OutOfGrid",
    "OutOfHorizon",
    "PotentialValue",
    "QFunctionSet",
    "QRangeError",
    "RateBasis",
    "Regime",
    "SeriesQuote",
    "SingularBubble",
    "SquareBubble",
    "StiffRegime",
    "ZeroBubble",
    "apply_K_power_to_monomial",
    "call_price",
    "call_s_derivative",
    "classify_regime",
    "dual_params",
    "dual_quote",
    "exact_series",
    "greek_table",
    "greek_vector",
    "interaction_clock",
    "p_power_coeffs",
    "perturbative_order3",
    "potential",
    "potential_v0",
    "potential_v0_star",
    "price_curve",
    "q_function",
    "quote",
    "triangle",
    "truncated_order3",
]
