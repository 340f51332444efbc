"""Synthetic hourly feeds standing in for historical market data.

Every token has a fixed circulating supply, so market cap moves with price.
The bull and bear shapes use a Brownian bridge around a log-linear trend, so
the terminal total market cap hits the target multiple exactly while the path
in between still fluctuates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from datetime import timedelta
from typing import Optional

import numpy as np

from .feed import FeedRow, parse_timestamp

SYNTH_KINDS = ("flat", "random_walk", "bull", "bear", "crash")


@dataclass
class SynthParams:
    tokens: int = 4
    hours: int = 720
    start: str = "2021-04-08T00:00:00Z"
    volatility: float = 0.01  # hourly log-price sd
    drift: float = 0.0  # hourly log-price drift (random_walk, crash)
    base_market_cap: float = 1e10
    cap_decay: float = 0.6  # market cap of token i is base * decay**i
    volume_fraction: float = 0.05  # daily volume as a share of market cap
    bull_cap_multiple: float = 2.33
    bear_cap_multiple: float = 0.36
    bull_volume_multiple: float = 1.78
    bear_volume_multiple: float = 0.33
    crash_token: Optional[str] = None  # defaults to the last token
    crash_factor: float = 0.995  # fraction of value lost
    crash_start: Optional[int] = None  # hour offset, defaults to mid-window
    crash_hours: int = 72

    def __post_init__(self) -> None:
        if self.tokens < 2:
            raise ValueError("need at least two tokens")
        if self.hours < 1:
            raise ValueError("hours must be positive")
        if not self.volatility > 0.0:
            raise ValueError("volatility must be positive")
        if not self.base_market_cap > 0.0 or not 0.0 < self.cap_decay <= 1.0:
            raise ValueError("market caps must be positive")
        if not 0.99 <= self.crash_factor < 1.0:
            raise ValueError("crash_factor must lie in [0.99, 1)")
        if self.crash_hours < 1:
            raise ValueError("crash_hours must be positive")
        parse_timestamp(self.start)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def token_names(n: int) -> list[str]:
    return [f"T{i:02d}" for i in range(n)]


def initial_prices(n: int) -> np.ndarray:
    # spread prices over several decades so ratios are non-trivial
    return np.array([10.0 ** ((i * 7) % 5 - 1) * (1.0 + 0.37 * i) for i in range(n)])


def _bridge(rng: np.random.Generator, n: int, sd: float) -> np.ndarray:
    """Brownian bridge over n points pinned to 0 at both ends."""
    if n == 1:
        return np.zeros(1)
    walk = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, sd, n - 1))])
    t = np.linspace(0.0, 1.0, n)
    return walk - t * walk[-1]


def _walk(rng: np.random.Generator, n: int, sd: float, drift: float) -> np.ndarray:
    steps = rng.normal(drift, sd, n - 1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def synth_feed(kind: str, params: Optional[SynthParams] = None, seed: int = 0) -> list[FeedRow]:
    """Generate one row per token per hour for the requested market shape."""
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic feed kind {kind!r}; choose from {SYNTH_KINDS}")
    p = params or SynthParams()
    rng = np.random.default_rng(seed)
    names = token_names(p.tokens)
    n = p.hours
    p0 = initial_prices(p.tokens)
    caps0 = p.base_market_cap * p.cap_decay ** np.arange(p.tokens)
    supply = caps0 / p0
    frac = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)

    log_paths = np.zeros((p.tokens, n))
    vol_trend = np.ones(n)
    if kind == "random_walk":
        for i in range(p.tokens):
            log_paths[i] = _walk(rng, n, p.volatility, p.drift)
    elif kind in ("bull", "bear"):
        cap_mult = p.bull_cap_multiple if kind == "bull" else p.bear_cap_multiple
        vol_mult = p.bull_volume_multiple if kind == "bull" else p.bear_volume_multiple
        for i in range(p.tokens):
            log_paths[i] = math.log(cap_mult) * frac + _bridge(rng, n, p.volatility)
        vol_trend = vol_mult ** frac
    elif kind == "crash":
        for i in range(p.tokens):
            log_paths[i] = _walk(rng, n, p.volatility, p.drift)
        victim = names.index(p.crash_token) if p.crash_token else p.tokens - 1
        start = p.crash_start if p.crash_start is not None else n // 2
        start = min(max(start, 0), n - 1)
        span = max(min(p.crash_hours, n - 1 - start), 1)
        target = math.log(1.0 - p.crash_factor)
        path = log_paths[victim]
        begin = path[start]
        for h in range(start, n):
            t = min((h - start) / span, 1.0)
            path[h] = begin + t * (target - begin)
    prices = p0[:, None] * np.exp(log_paths)
    caps = supply[:, None] * prices
    volumes = p.volume_fraction * caps0[:, None] * vol_trend[None, :]

    t0 = parse_timestamp(p.start)
    rows = []
    for h in range(n):
        ts = t0 + timedelta(hours=h)
        for i, name in enumerate(names):
            rows.append(FeedRow(ts, name, float(prices[i, h]), float(volumes[i, h]), float(caps[i, h])))
    return rows
