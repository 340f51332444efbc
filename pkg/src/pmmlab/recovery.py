"""Equilibrium-anchor recovery after oracle price moves.

Two rules live here: the single-pair PMM rule, which keeps the anchor of the
token in excess and re-solves the depleted token's anchor, and the MPMM rule,
which searches the family of curves through the current balances for the one
whose anchors sit closest to the LP deposits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .curve import (
    DUST_FLOOR,
    OracleQuote,
    PairCurveState,
    PmmParams,
    Regime,
    classify_regime,
)
from .errors import NumericalDomainError, RetargetInfeasible
from .optimize import bracketed_minimize


@dataclass(frozen=True)
class DepositRecord:
    b_r: float
    q_r: float

    def __post_init__(self) -> None:
        for name in ("b_r", "q_r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class RetargetResult:
    b0_new: float
    q0_new: float
    objective: Optional[float] = None


def recovered_anchor(x: float, y: float, y0: float, ratio: float, k: float) -> float:
    """Anchor of the short token ``x`` that puts ``(x, y)`` on a curve with
    counter anchor ``y0``.

    ``ratio`` is ``p_x / p_y``.  Uses the positive root; the rationalised form
    ``(sqrt(1+z) - 1) = z / (sqrt(1+z) + 1)`` keeps precision for small moves.
    """
    excess = y - y0
    z = 4.0 * k * excess / (ratio * x)
    if 1.0 + z < 0.0:
        raise NumericalDomainError(f"square-root argument {1.0 + z!r} is negative")
    root = math.sqrt(1.0 + z)
    assert x - x / (2.0 * k) * (root + 1.0) < 0.0, "negative root must be invalid"
    return x + 2.0 * excess / (ratio * (root + 1.0))


def pmm_recover(
    state: PairCurveState, new_prices: OracleQuote, params: PmmParams
) -> RetargetResult:
    regime = classify_regime(state)
    k = params.k
    if regime is Regime.SHORT_BASE:
        b0 = recovered_anchor(state.b, state.q, state.q0, new_prices.ratio, k)
        return RetargetResult(b0, state.q0)
    if regime is Regime.SHORT_QUOTE:
        q0 = recovered_anchor(
            state.q, state.b, state.b0, new_prices.p_q / new_prices.p_b, k
        )
        return RetargetResult(state.b0, q0)
    return RetargetResult(state.b0, state.q0)


def deposit_distance(b0: float, q0: float, deposits: DepositRecord) -> float:
    """Squared relative distance of a pair of anchors from the LP deposits."""
    db = 1.0 - b0 / deposits.b_r
    dq = 1.0 - q0 / deposits.q_r
    return db * db + dq * dq


def mpmm_retarget(
    b: float,
    q: float,
    b0: float,
    q0: float,
    deposits: DepositRecord,
    prices: OracleQuote,
    params: PmmParams,
) -> RetargetResult:
    """Anchors closest to the deposits among curves through ``(b, q)``.

    When the base anchor lags the deposits relatively more than the quote
    anchor, the quote anchor is the free variable and the base anchor follows
    from the short-base recovery relation; otherwise (ties included) the
    roles are reversed.  The free anchor is confined to values at or below its
    own balance, which is exactly the range where the derived curve passes
    through ``(b, q)`` on the correct branch.
    """
    k = params.k
    ratio = prices.ratio
    if b0 / deposits.b_r < q0 / deposits.q_r:

        def anchors(q0_new: float) -> tuple[float, float]:
            return recovered_anchor(b, q, q0_new, ratio, k), q0_new

        lo, hi = DUST_FLOOR * q, q
    else:
        inv = prices.p_q / prices.p_b

        def anchors(b0_new: float) -> tuple[float, float]:
            return b0_new, recovered_anchor(q, b, b0_new, inv, k)

        lo, hi = DUST_FLOOR * b, b

    def objective(free: float) -> float:
        nb0, nq0 = anchors(free)
        return deposit_distance(nb0, nq0, deposits)

    best = bracketed_minimize(objective, lo, hi)
    if not math.isfinite(best.fun):
        raise RetargetInfeasible(f"no finite objective on [{lo!r}, {hi!r}]")
    nb0, nq0 = anchors(best.x)
    return RetargetResult(nb0, nq0, best.fun)


def pair_k(k_base: float, k_quote: float) -> float:
    """Pair slippage parameter as the mean of the two per-token values."""
    for v in (k_base, k_quote):
        if not (math.isfinite(v) and 0.0 < v < 1.0):
            raise ValueError(f"per-token k must lie in (0, 1), got {v!r}")
    return 0.5 * (k_base + k_quote)
