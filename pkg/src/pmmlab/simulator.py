"""Scenario driver: pool initialization, shared traffic, metric streams.

Traffic for the whole window is drawn first from a single seeded generator,
then every maker replays the identical event list against its own state.
Makers never share mutable state, and records are emitted in
(maker order, swap index) order, so output is reproducible byte for byte.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, SwapRefused
from .feed import HourlyFeed, build_hourly, format_timestamp, parse_timestamp, read_feed
from .makers import (
    CPMM,
    CSMM,
    K_DEPENDENT,
    MAKER_KINDS,
    MCPMM,
    MCSMM,
    MPMM,
    PMM,
    Maker,
    all_pairs,
)
from .metrics import capital_efficiency, quartiles
from .synth import SYNTH_KINDS, SynthParams, synth_feed
from .traffic import TrafficEvent, sample_traffic

DEFAULT_K = (0.05, 0.25, 0.5, 0.75)
SWAPS_PER_HOUR = 20
CRASH_SWAPS_PER_HOUR = 100
SWAP_COLUMNS = ("swap_index", "timestamp", "maker", "token_in", "token_out",
                "amount_in", "amount_out", "capital_efficiency")
IL_COLUMNS = ("swap_index", "timestamp", "maker", "unit_id", "impermanent_loss")
SUMMARY_COLUMNS = ("maker", "metric", "q1", "median", "q3", "count")


@dataclass
class ScenarioConfig:
    feed: Optional[str] = None
    synth_kind: Optional[str] = "random_walk"
    synth: SynthParams = field(default_factory=SynthParams)
    tokens: Optional[tuple[str, ...]] = None
    start: Optional[str] = None
    end: Optional[str] = None
    swaps_per_hour: Optional[int] = None  # None -> 100 for crash, else 20
    mean_swap_usd: float = 10_000.0
    swap_usd_sd: Optional[float] = None  # None -> mean / 3
    k_values: tuple[float, ...] = DEFAULT_K
    seed: int = 0
    makers: tuple[str, ...] = MAKER_KINDS
    provision_fraction: float = 0.01
    pair_value_fraction: float = 0.01

    def __post_init__(self) -> None:
        if self.swaps_per_hour is None:
            self.swaps_per_hour = CRASH_SWAPS_PER_HOUR if self.synth_kind == "crash" else SWAPS_PER_HOUR
        if self.tokens is not None:
            self.tokens = tuple(self.tokens)
        self.k_values = tuple(float(k) for k in self.k_values)
        self.makers = tuple(self.makers)
        self.validate()

    def validate(self) -> None:
        if self.feed is None and self.synth_kind is None:
            raise ConfigError("either feed or synth_kind must be set")
        if self.feed is not None and self.synth_kind is not None:
            raise ConfigError("feed and synth_kind are mutually exclusive")
        if self.synth_kind is not None and self.synth_kind not in SYNTH_KINDS:
            raise ConfigError(f"synth_kind must be one of {SYNTH_KINDS}")
        if int(self.swaps_per_hour) != self.swaps_per_hour or self.swaps_per_hour < 0:
            raise ConfigError("swaps_per_hour must be a non-negative integer")
        if not self.mean_swap_usd > 0:
            raise ConfigError("mean_swap_usd must be positive")
        if self.swap_usd_sd is not None and not self.swap_usd_sd > 0:
            raise ConfigError("swap_usd_sd must be positive")
        unknown = set(self.makers) - set(MAKER_KINDS)
        if unknown or not self.makers:
            raise ConfigError(f"unknown makers {sorted(unknown)}; choose from {MAKER_KINDS}")
        for k in self.k_values:
            if not 0.0 < k < 1.0:
                raise ConfigError(f"k values must lie in (0, 1), got {k!r}")
        if any(m in K_DEPENDENT for m in self.makers) and not self.k_values:
            raise ConfigError("k_values is empty but a k-dependent maker is selected")
        for name in ("provision_fraction", "pair_value_fraction"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def sd(self) -> float:
        return self.swap_usd_sd if self.swap_usd_sd is not None else self.mean_swap_usd / 3.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tokens"] = list(self.tokens) if self.tokens else None
        d["k_values"] = list(self.k_values)
        d["makers"] = list(self.makers)
        return d


def load_feed(config: ScenarioConfig) -> HourlyFeed:
    if config.feed is not None:
        feed = build_hourly(read_feed(config.feed))
    else:
        feed = build_hourly(synth_feed(config.synth_kind, config.synth, config.seed))
    start = parse_timestamp(config.start) if config.start else None
    end = parse_timestamp(config.end) if config.end else None
    return feed.window(start, end, config.tokens)


# -- initialization ---------------------------------------------------------------


def maker_label(kind: str, k: Optional[float] = None) -> str:
    return kind if k is None else f"{kind}@{k:g}"


def init_pools(
    market_caps: Mapping[str, float],
    prices: Mapping[str, float],
    makers: Sequence[str] = MAKER_KINDS,
    k_values: Sequence[float] = DEFAULT_K,
    provision_fraction: float = 0.01,
    pair_value_fraction: float = 0.01,
) -> list[Maker]:
    """Build the requested makers, seeded from first-hour caps and prices.

    MCSMM and MPMM hold ``provision_fraction`` of each token's market cap;
    MCPMM holds the same total capital split equally in value across tokens.
    Two-token pools hold, per side, ``pair_value_fraction * mc(a) * mc(b) /
    mc(all)`` of value, which splits each token's provision across its pairs
    in proportion to the partner's size.  Anchors equal deposits.
    """
    tokens = sorted(market_caps)
    for t in tokens:
        if not (math.isfinite(market_caps[t]) and market_caps[t] > 0):
            raise ValueError(f"market cap of {t!r} must be positive")
        if not prices[t] > 0:
            raise ValueError(f"price of {t!r} must be positive")
    total = math.fsum(market_caps.values())
    single = {t: provision_fraction * market_caps[t] / prices[t] for t in tokens}
    # equal-weight product pools price pair (i, j) at x_j / x_i, so they need
    # equal value per token to start at market prices
    equal_value = provision_fraction * total / len(tokens)
    balanced = {t: equal_value / prices[t] for t in tokens}
    pairs = {}
    for a, b in all_pairs(tokens):
        value = pair_value_fraction * market_caps[a] * market_caps[b] / total
        pairs[(a, b)] = {a: value / prices[a], b: value / prices[b]}

    built: list[Maker] = []
    for kind in MAKER_KINDS:
        if kind not in makers:
            continue
        if kind == "csmm":
            built.append(CSMM(pairs, prices))
        elif kind == "cpmm":
            built.append(CPMM(pairs, prices))
        elif kind == "mcsmm":
            built.append(MCSMM(single, prices))
        elif kind == "mcpmm":
            built.append(MCPMM(balanced, prices))
        elif kind == "pmm":
            built.extend(PMM(pairs, prices, k, name=maker_label(kind, k)) for k in k_values)
        elif kind == "mpmm":
            built.extend(MPMM(single, prices, k, name=maker_label(kind, k)) for k in k_values)
    return built


# -- running ----------------------------------------------------------------------


def generate_traffic(feed: HourlyFeed, config: ScenarioConfig) -> list[tuple[int, TrafficEvent]]:
    """Whole-window traffic as (hour position, event) pairs."""
    rng = np.random.default_rng(config.seed)
    out = []
    for i in range(len(feed)):
        events = sample_traffic(feed.timestamp(i), feed.volumes_at(i), int(config.swaps_per_hour),
                                config.mean_swap_usd, config.sd, rng)
        out.extend((i, ev) for ev in events)
    return out


@dataclass
class ScenarioResult:
    makers: list[str]
    swaps: list[tuple] = field(default_factory=list)
    il: list[tuple] = field(default_factory=list)
    refused: dict[str, int] = field(default_factory=dict)
    zero_output: dict[str, int] = field(default_factory=dict)
    n_events: int = 0
    maker_objects: list[Maker] = field(default_factory=list, repr=False)

    def values(self, maker: str, metric: str) -> list[float]:
        if metric == "capital_efficiency":
            return [r[7] for r in self.swaps if r[2] == maker and r[7] is not None]
        if metric == "abs_ce_deviation":
            return [abs(r[7] - 1.0) for r in self.swaps if r[2] == maker and r[7] is not None]
        if metric == "impermanent_loss":
            return [r[4] for r in self.il if r[2] == maker]
        raise KeyError(metric)

    def summary(self) -> list[tuple]:
        """Quartiles per maker, derived from the raw streams."""
        rows = []
        for m in self.makers:
            for metric in ("capital_efficiency", "abs_ce_deviation", "impermanent_loss"):
                vals = self.values(m, metric)
                rows.append((m, metric, *quartiles(vals), len(vals)))
        return rows


def run_makers(
    makers: Sequence[Maker],
    feed: HourlyFeed,
    traffic: Sequence[tuple[int, TrafficEvent]],
) -> ScenarioResult:
    result = ScenarioResult([m.name for m in makers], n_events=len(traffic),
                            maker_objects=list(makers))
    price_cache: dict[int, dict[str, float]] = {}
    for maker in makers:
        refused = zero = 0
        for idx, (hour, ev) in enumerate(traffic):
            prices = price_cache.get(hour)
            if prices is None:
                prices = price_cache[hour] = feed.prices_at(hour)
            amount_in = ev.usd_amount / prices[ev.token_in]
            try:
                fill = maker.execute(ev.token_in, ev.token_out, amount_in, prices)
            except SwapRefused:
                refused += 1
                continue
            ts = format_timestamp(ev.timestamp)
            if fill.amount_out > 0:
                ce = capital_efficiency(fill, prices)
            else:
                ce = None
                zero += 1
            result.swaps.append((idx, ts, maker.name, ev.token_in, ev.token_out,
                                 amount_in, fill.amount_out, ce))
            for unit in maker.touched_units(ev.token_in, ev.token_out):
                result.il.append((idx, ts, maker.name, unit.unit_id,
                                  maker.impermanent_loss(unit, prices)))
        result.refused[maker.name] = refused
        result.zero_output[maker.name] = zero
    return result


def run_scenario(config: ScenarioConfig, feed: Optional[HourlyFeed] = None) -> ScenarioResult:
    feed = feed if feed is not None else load_feed(config)
    if len(feed) == 0:
        return ScenarioResult([])
    makers = init_pools(
        feed.caps_at(0), feed.prices_at(0), config.makers, config.k_values,
        config.provision_fraction, config.pair_value_fraction,
    )
    return run_makers(makers, feed, generate_traffic(feed, config))


# -- output -----------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_outputs(result: ScenarioResult, out_dir: Union[str, Path]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "swaps": (out / "swaps.csv", SWAP_COLUMNS, result.swaps),
        "il": (out / "il.csv", IL_COLUMNS, result.il),
        "summary": (out / "summary.csv", SUMMARY_COLUMNS, result.summary()),
    }
    for path, header, rows in files.values():
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    return {k: v[0] for k, v in files.items()}
