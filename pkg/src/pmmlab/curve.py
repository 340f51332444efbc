"""PMM state curve for a single base/quote pair.

The curve is split at the equilibrium anchors ``(b0, q0)``.  While the base
token is short (``b < b0``) the quote balance is an explicit function of the
base balance; while the quote token is short the roles swap.  Every helper
below is written once for a generic "own / counter" token pair and exposed
through base- and quote-named wrappers, so both branches share code.

All quantities are plain floats; states are immutable and swaps return a new
state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import CorruptStateError, NumericalDomainError, SwapRefused

CURVE_RTOL = 1e-9
DERIV_RTOL = 1e-6
# output balance may not fall below this fraction of its anchor
DUST_FLOOR = 1e-12


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class PmmParams:
    k: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and 0.0 < self.k < 1.0):
            raise ValueError(f"k must lie strictly inside (0, 1), got {self.k!r}")


@dataclass(frozen=True)
class OracleQuote:
    """Fair numeraire prices of the base and quote tokens."""

    p_b: float
    p_q: float

    def __post_init__(self) -> None:
        _check_positive("p_b", self.p_b)
        _check_positive("p_q", self.p_q)

    @property
    def ratio(self) -> float:
        """Market rate in quote tokens per base token."""
        return self.p_b / self.p_q


@dataclass(frozen=True)
class PairCurveState:
    b: float
    q: float
    b0: float
    q0: float

    def __post_init__(self) -> None:
        for name in ("b", "q", "b0", "q0"):
            _check_positive(name, getattr(self, name))


class Regime(Enum):
    SHORT_BASE = "short_base"
    SHORT_QUOTE = "short_quote"
    AT_EQUILIBRIUM = "at_equilibrium"


class Side(Enum):
    BASE_IN = "base_in"
    QUOTE_IN = "quote_in"


@dataclass(frozen=True)
class SwapReceipt:
    amount_in: float
    amount_out: float
    new_state: PairCurveState
    crossed_equilibrium: bool


def classify_regime(state: PairCurveState) -> Regime:
    short_b = state.b < state.b0
    short_q = state.q < state.q0
    if short_b and short_q:
        raise CorruptStateError(f"both tokens below their anchors: {state}")
    if short_b:
        return Regime.SHORT_BASE
    if short_q:
        return Regime.SHORT_QUOTE
    if state.b == state.b0 and state.q == state.q0:
        return Regime.AT_EQUILIBRIUM
    raise CorruptStateError(f"both tokens above their anchors: {state}")


# -- generic branch helpers --------------------------------------------------
# "own" is the token that is short on this branch, "counter" the other one;
# ratio is p_own / p_counter.


def _branch_value(x: float, x0: float, y0: float, ratio: float, k: float) -> float:
    return -ratio * (x - x0) * (1.0 - k + k * x0 / x) + y0


def _invert_branch(y: float, x0: float, y0: float, ratio: float, k: float) -> float:
    """Solve ``_branch_value(x) == y`` for the own balance ``x`` in (0, x0]."""
    if y == y0:
        return x0
    # ratio*(k-1) x^2 + (ratio*x0*(1-2k) + (y0-y)) x + ratio*k*x0^2 = 0
    a = ratio * (k - 1.0)
    lin = ratio * x0 * (1.0 - 2.0 * k) + (y0 - y)
    c = ratio * k * x0 * x0
    disc = lin * lin - 4.0 * a * c
    if disc < 0.0:
        raise NumericalDomainError(f"negative discriminant {disc!r}")
    s = math.sqrt(disc)
    # a < 0 < c: the roots have opposite signs; keep the positive one
    if lin <= 0.0:
        x = 2.0 * c / (s - lin)
    else:
        x = (lin + s) / (-2.0 * a)
    assert c / (a * x) <= 0.0, "discarded root should be non-positive"
    return min(x, x0)


def _slope(x: float, x0: float, ratio: float, k: float) -> float:
    """|dy/dx| on the branch where ``x`` is short."""
    r = x0 / x
    return ratio * (1.0 + k * (r * r - 1.0))


def _leg_toward(x: float, x0: float, ratio: float, k: float, dx: float) -> float:
    """Counter-token output while the own balance climbs toward its anchor.

    Closed-form difference of the branch value between ``x`` and ``x + dx``;
    avoids subtracting two nearly equal curve evaluations.
    """
    return ratio * dx * (1.0 - k + k * x0 * x0 / (x * (x + dx)))


def _leg_away(y: float, y0: float, ratio: float, k: float, dx: float) -> float:
    """New counter balance after ``dx`` enters while the counter token is short.

    Works in units of ``y0``.  Solves for the output when it is small and for
    the remaining balance when the output eats most of the reserve, so both
    tiny and huge trades keep full relative precision.
    """
    u = y / y0
    w = dx * ratio / y0
    if not math.isfinite(w):
        return 0.0
    one_k = 1.0 - k
    lin = one_k * u * u + k + w * u
    # disc = lin^2 (1 - t); scaling by lin keeps huge trades from overflowing
    t = (4.0 * one_k * u * u * u * w / lin) / lin
    if t > 1.0:
        raise NumericalDomainError(f"negative discriminant (scaled term {t!r})")
    out = 2.0 * w * u * u / (lin * (1.0 + math.sqrt(1.0 - t)))
    if out <= 0.5 * u:
        return (u - out) * y0
    beta = w - one_k * u + k / u
    root = math.hypot(beta, 2.0 * math.sqrt(one_k * k))
    if beta > 0.0:
        rest = 2.0 * k / (beta + root)
    else:
        rest = (root - beta) / (2.0 * one_k)
    return rest * y0


def _swap_generic(
    x: float, y: float, x0: float, y0: float, ratio: float, k: float, dx: float
) -> tuple[float, float, bool]:
    """Push ``dx`` of the own token into the pool; return (x', y', crossed)."""
    new_x = x + dx
    if x < x0:
        if new_x < x0:
            new_y = max(y - _leg_toward(x, x0, ratio, k, dx), y0)
            return new_x, new_y, False
        rest = new_x - x0
        if rest <= 0.0:
            return x0, y0, False
        # split at the equilibrium point and continue on the other branch
        return new_x, _leg_away(y0, y0, ratio, k, rest), True
    return new_x, _leg_away(y, y0, ratio, k, dx), False


# -- public curve operations ---------------------------------------------------


def quote_from_base(
    b: float, b0: float, q0: float, prices: OracleQuote, params: PmmParams
) -> float:
    """Quote balance on the short-base branch."""
    if not 0.0 < b <= b0:
        raise ValueError(f"base balance {b!r} outside (0, b0={b0!r}]")
    return _branch_value(b, b0, q0, prices.ratio, params.k)


def base_from_quote(
    q: float, q0: float, b0: float, prices: OracleQuote, params: PmmParams
) -> float:
    """Base balance on the short-quote branch."""
    if not 0.0 < q <= q0:
        raise ValueError(f"quote balance {q!r} outside (0, q0={q0!r}]")
    return _branch_value(q, q0, b0, prices.p_q / prices.p_b, params.k)


def invert_base_branch(
    q: float, b0: float, q0: float, prices: OracleQuote, params: PmmParams
) -> float:
    """Base balance in (0, b0] whose short-base quote equals ``q``."""
    if not q >= q0:
        raise ValueError(f"quote balance {q!r} below q0={q0!r}")
    return _invert_branch(q, b0, q0, prices.ratio, params.k)


def invert_quote_branch(
    b: float, q0: float, b0: float, prices: OracleQuote, params: PmmParams
) -> float:
    """Quote balance in (0, q0] whose short-quote base equals ``b``."""
    if not b >= b0:
        raise ValueError(f"base balance {b!r} below b0={b0!r}")
    return _invert_branch(b, q0, b0, prices.p_q / prices.p_b, params.k)


def marginal_rate_q_per_b(
    state: PairCurveState, prices: OracleQuote, params: PmmParams
) -> float:
    """Instantaneous quote tokens paid out per base token paid in."""
    if classify_regime(state) is Regime.SHORT_QUOTE:
        return 1.0 / _slope(state.q, state.q0, prices.p_q / prices.p_b, params.k)
    return _slope(state.b, state.b0, prices.ratio, params.k)


def marginal_rate_b_per_q(
    state: PairCurveState, prices: OracleQuote, params: PmmParams
) -> float:
    """Instantaneous base tokens paid out per quote token paid in."""
    if classify_regime(state) is Regime.SHORT_BASE:
        return 1.0 / _slope(state.b, state.b0, prices.ratio, params.k)
    return _slope(state.q, state.q0, prices.p_q / prices.p_b, params.k)


def curve_residual(state: PairCurveState, prices: OracleQuote, params: PmmParams) -> float:
    """Relative distance of ``state`` from its governing curve branch."""
    regime = classify_regime(state)
    if regime is Regime.SHORT_BASE:
        expected = quote_from_base(state.b, state.b0, state.q0, prices, params)
        return abs(state.q - expected) / expected
    if regime is Regime.SHORT_QUOTE:
        expected = base_from_quote(state.q, state.q0, state.b0, prices, params)
        return abs(state.b - expected) / expected
    return 0.0


def swap_exact_in(
    state: PairCurveState,
    prices: OracleQuote,
    params: PmmParams,
    side: Side,
    amount_in: float,
) -> SwapReceipt:
    if not (math.isfinite(amount_in) and amount_in > 0.0):
        raise ValueError(f"amount_in must be positive, got {amount_in!r}")
    classify_regime(state)
    k = params.k
    if side is Side.BASE_IN:
        nb, nq, crossed = _swap_generic(
            state.b, state.q, state.b0, state.q0, prices.ratio, k, amount_in
        )
        out, left, anchor = state.q - nq, nq, state.q0
    else:
        nq, nb, crossed = _swap_generic(
            state.q, state.b, state.q0, state.b0, prices.p_q / prices.p_b, k, amount_in
        )
        out, left, anchor = state.b - nb, nb, state.b0
    if not (math.isfinite(nb) and math.isfinite(nq)):
        raise SwapRefused("trade size overflows the pool balances")
    if not (math.isfinite(left) and left >= DUST_FLOOR * anchor):
        raise SwapRefused(f"output balance {left!r} would fall below the dust floor")
    return SwapReceipt(
        amount_in=amount_in,
        amount_out=out,
        new_state=PairCurveState(nb, nq, state.b0, state.q0),
        crossed_equilibrium=crossed,
    )
