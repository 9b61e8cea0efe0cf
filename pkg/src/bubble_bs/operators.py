"""Powers of the Euler operator K = S d/dS and the resummation of exp(x K).

``K^n = sum_{m=1}^{n} alpha[n, m] S^m D^m`` with ``alpha[n, 1] = alpha[n, n] = 1``
and ``alpha[n, m] = m alpha[n-1, m] + alpha[n-1, m-1]``. Grouping ``exp(x K)``
by ``S^j D^j`` gives ``exp(x K) = sum_j Q_j(x) S^j D^j``.

The triangle obeys the Stirling-second-kind recursion, so
``Q_j(x) = (e^x - 1)^j / j!``; :class:`QFunctionSet` also sums the defining
series so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import BubbleValueError, CoefficientOverflow, QRangeError

INT128_MAX = 2**127 - 1
DEFAULT_X_RANGE = 30.0


@dataclass(frozen=True)
class CoeffTriangle:
    """Exact coefficient rows; ``rows[n - 1][m - 1] == alpha[n, m]``."""

    rows: tuple[tuple[int, ...], ...]

    @property
    def n_max(self) -> int:
        return len(self.rows)

    def row(self, n: int) -> tuple[int, ...]:
        if not 1 <= n <= self.n_max:
            raise IndexError(f"row {n} outside 1..{self.n_max}")
        return self.rows[n - 1]

    def __getitem__(self, nm: tuple[int, int]) -> int:
        n, m = nm
        if not 1 <= m <= n:
            raise IndexError(f"alpha[{n}, {m}] needs 1 <= m <= n")
        return self.row(n)[m - 1]


@lru_cache(maxsize=None)
def _rows(n_max: int) -> tuple[tuple[int, ...], ...]:
    """Unbounded Python-int rows ``1..n_max``."""
    rows = [(1,)]
    for n in range(2, n_max + 1):
        prev = rows[-1]
        row = [1]
        for m in range(2, n):
            row.append(m * prev[m - 1] + prev[m - 2])
        row.append(1)
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=None)
def triangle(n_max: int) -> CoeffTriangle:
    """Build rows ``1..n_max``; raises :class:`CoefficientOverflow` past 128 bits."""
    if n_max < 1:
        raise BubbleValueError(f"n_max must be >= 1, got {n_max}")
    rows = _rows(n_max)
    for n, row in enumerate(rows, start=1):
        if max(row) > INT128_MAX:
            raise CoefficientOverflow(
                f"row {n} of the coefficient triangle exceeds 128-bit integers"
            )
    return CoeffTriangle(rows=rows)


def q_function(j: int, x: float, x_range: float = DEFAULT_X_RANGE) -> float:
    """``Q_j(x)``: 1 for ``j = 0``, ``expm1(x)`` for ``j = 1``, ``expm1(x)**j / j!`` beyond."""
    if j < 0:
        raise BubbleValueError(f"j must be >= 0, got {j}")
    if not abs(x) <= x_range:
        raise QRangeError(f"|x| = {abs(x)} exceeds the supported range {x_range}")
    if j == 0:
        return 1.0
    e = math.expm1(x)
    if j == 1:
        return e
    return e**j / math.factorial(j)


@dataclass(frozen=True)
class QFunctionSet:
    """Resummation functions ``Q_0..Q_n_max`` with a defining-series evaluator."""

    n_max: int
    series_cutoff: int = 60
    x_range: float = DEFAULT_X_RANGE

    def __call__(self, j: int, x: float) -> float:
        if j > self.n_max:
            raise BubbleValueError(f"Q_{j} beyond n_max={self.n_max}")
        return q_function(j, x, self.x_range)

    def values(self, x: float) -> list[float]:
        return [self(j, x) for j in range(self.n_max + 1)]

    def series(self, j: int, x: float) -> float:
        """Truncated defining series ``sum_{m=j}^{cutoff} alpha[m, j] x^m / m!``."""
        if j == 0:
            return 1.0
        if not abs(x) <= self.x_range:
            raise QRangeError(f"|x| = {abs(x)} exceeds the supported range {self.x_range}")
        # Rows past 43 exceed 128 bits; the series only needs them as exact ratios.
        rows = _rows(self.series_cutoff)
        return math.fsum(float(Fraction(rows[m - 1][j - 1], math.factorial(m))) * x**m
                         for m in range(j, self.series_cutoff + 1))


def falling_factorial(p: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= p - i
    return out


def apply_K_power_to_monomial(n: int, p: int) -> tuple[int, int]:
    """``K^n S^p = p^n S^p``, evaluated two ways.

    Returns ``(p**n, p + sum_{j>=2} alpha[n, j] p (p-1) ... (p-j+1))``; the
    second uses the triangle expansion. ``n == 0`` gives ``(1, 1)``.
    """
    if n < 0 or p < 0:
        raise BubbleValueError(f"need n >= 0 and p >= 0, got n={n}, p={p}")
    direct = p**n
    if n == 0:
        expansion = 1
    else:
        tri = triangle(n)
        expansion = p + sum(tri[n, j] * falling_factorial(p, j) for j in range(2, n + 1))
    if max(abs(direct), abs(expansion)) > INT128_MAX:
        raise CoefficientOverflow(f"K^{n} S^{p} multiplier exceeds 128-bit integers")
    return direct, expansion


def p_power_coeffs(n: int) -> dict[int, int]:
    """Coefficients of ``P^n = (K - I)^n`` on the basis ``S^j D^j`` (``j = 0`` is I).

    Binomial expansion of ``(K - I)^n`` with each ``K^k`` replaced by its
    triangle row. Only ``n`` in 1..3 is supported.
    """
    if n not in (1, 2, 3):
        raise BubbleValueError(f"P^n coefficients supported for n in 1..3, got {n}")
    tri = triangle(n)
    coeffs: dict[int, int] = {0: (-1) ** n}
    for k in range(1, n + 1):
        sign = math.comb(n, k) * (-1) ** (n - k)
        for j in range(1, k + 1):
            coeffs[j] = coeffs.get(j, 0) + sign * tri[k, j]
    return {j: c for j, c in sorted(coeffs.items(), reverse=True) if c != 0}


# Diagonal actions on S^p, used for exact operator checks.
def t_on_monomial(p: int) -> int:
    """``T S^p = S^2 D^2 S^p = p (p - 1) S^p``."""
    return p * (p - 1)


def p_on_monomial(p: int) -> int:
    """``P S^p = (S D - I) S^p = (p - 1) S^p``."""
    return p - 1


def tp_commutator_on_monomial(p: int) -> int:
    """Multiplier of ``(T P - P T) S^p``."""
    return t_on_monomial(p) * p_on_monomial(p) - p_on_monomial(p) * t_on_monomial(p)


def resummed_exp_on_monomial(x: float, p: int, n_terms: int = 20) -> float:
    """``sum_{n<=n_terms} Q_n(x) p (p-1) ... (p-n+1)``; tends to ``e^{x p}``."""
    return math.fsum(q_function(n, x) * falling_factorial(p, n) for n in range(n_terms + 1))
