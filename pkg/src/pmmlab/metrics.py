"""Swap- and pool-level statistics."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .makers import Fill


def capital_efficiency(fill: Fill, prices: Mapping[str, float]) -> float:
    """(input / output) relative to the fair rate; 1 means a market-rate fill."""
    if not fill.amount_out > 0.0:
        raise ValueError("capital efficiency undefined for a zero output")
    market = prices[fill.token_out] / prices[fill.token_in]
    return (fill.amount_in / fill.amount_out) / market


def il_ratio(value_now: float, holding_now: float, holding_initial: float) -> float:
    return (value_now - holding_now) / holding_initial


def quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    if len(values) == 0:
        nan = float("nan")
        return nan, nan, nan
    q1, q2, q3 = np.percentile(np.asarray(values, dtype=float), [25, 50, 75])
    return float(q1), float(q2), float(q3)
