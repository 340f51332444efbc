"""Exogenous swap traffic: volume-weighted pair draws and normal dollar sizes."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrafficEvent:
    timestamp: datetime
    token_in: str
    token_out: str
    usd_amount: float


def draw_usd(rng: np.random.Generator, mean: float, sd: float) -> float:
    """Normal draw, redrawn until strictly positive."""
    while True:
        x = float(rng.normal(mean, sd))
        if x > 0.0:
            return x


def sample_traffic(
    timestamp: datetime,
    volumes: Mapping[str, float],
    swaps: int,
    mean_usd: float,
    sd_usd: float,
    rng: np.random.Generator,
) -> list[TrafficEvent]:
    """Draw ``swaps`` events for one hour.

    Each event picks the input token with probability proportional to its
    hourly volume, then the output token the same way among the remaining
    tokens.
    """
    tokens = sorted(volumes)
    w = np.array([volumes[t] for t in tokens], dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("volumes must be finite and non-negative")
    if np.count_nonzero(w) < 2:
        if swaps:
            log.warning("fewer than two tokens with volume at %s; no traffic", timestamp)
        return []
    events = []
    total = w.sum()
    for _ in range(swaps):
        i = int(rng.choice(len(tokens), p=w / total))
        rest = w.copy()
        rest[i] = 0.0
        j = int(rng.choice(len(tokens), p=rest / rest.sum()))
        events.append(TrafficEvent(timestamp, tokens[i], tokens[j], draw_usd(rng, mean_usd, sd_usd)))
    return events
