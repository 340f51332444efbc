from __future__ import annotations

import csv
import math
from collections import defaultdict
from datetime import timedelta

import pytest

from pmmlab.errors import ConfigError, FeedError
from pmmlab.feed import FeedRow, build_hourly, parse_timestamp, write_feed
from pmmlab.makers import CPMM, MCPMM, MCSMM, MPMM, PMM
from pmmlab.metrics import quartiles
from pmmlab.simulator import (
    ScenarioConfig,
    init_pools,
    load_feed,
    maker_label,
    run_scenario,
    write_outputs,
)
from pmmlab.synth import SynthParams

SMALL = SynthParams(tokens=3, hours=24)


def small_config(**kw):
    kw.setdefault("synth", SMALL)
    kw.setdefault("swaps_per_hour", 5)
    kw.setdefault("seed", 1)
    return ScenarioConfig(**kw)


# -- initialization ----------------------------------------------------------------


def test_pair_pool_value_example():
    caps = {"T1": 100e6, "T2": 50e6, "T3": 850e6}
    prices = {"T1": 1.0, "T2": 4.0, "T3": 2.0}
    (cpmm,) = init_pools(caps, prices, makers=("cpmm",), pair_value_fraction=1.0)
    pool = cpmm.pools[("T1", "T2")]
    assert pool["T1"] * prices["T1"] == pytest.approx(5e6, rel=1e-15)
    assert pool["T2"] * prices["T2"] == pytest.approx(5e6, rel=1e-15)


def test_single_token_provision_example():
    caps = {"A": 200e6, "B": 300e6}
    prices = {"A": 2.0, "B": 1.0}
    makers = init_pools(caps, prices, makers=("mcsmm", "mpmm"), k_values=(0.5,))
    assert isinstance(makers[0], MCSMM) and isinstance(makers[1], MPMM)
    for m in makers:
        assert m.balances["A"] == 1_000_000.0
    assert makers[1].anchors == makers[1].deposits == makers[1].balances


def test_pmm_anchors_equal_deposits_and_labels():
    caps, prices = {"A": 1e9, "B": 2e9, "C": 3e9}, {"A": 1.0, "B": 2.0, "C": 3.0}
    makers = init_pools(caps, prices, makers=("pmm",), k_values=(0.05, 0.75))
    assert [m.name for m in makers] == ["pmm@0.05", "pmm@0.75"]
    assert all(isinstance(m, PMM) for m in makers)
    for key, bal in makers[0].pools.items():
        assert makers[0].anchors[key] == bal
    assert len(makers[0].pools) == 3


def test_mcpmm_starts_at_market_prices():
    caps, prices = {"A": 5e9, "B": 1e9, "C": 2e8}, {"A": 3.0, "B": 0.2, "C": 40.0}
    (m,) = init_pools(caps, prices, makers=("mcpmm",))
    assert isinstance(m, MCPMM)
    values = [m.balances[t] * prices[t] for t in m.tokens]
    assert max(values) == pytest.approx(min(values), rel=1e-12)
    assert sum(values) == pytest.approx(0.01 * sum(caps.values()), rel=1e-12)
    # the marginal pool price of any pair equals the market price
    for a in m.tokens:
        for b in m.tokens:
            if a != b:
                assert m.balances[b] / m.balances[a] == pytest.approx(prices[a] / prices[b], rel=1e-12)


def test_init_rejects_bad_caps():
    with pytest.raises(ValueError):
        init_pools({"A": 0.0, "B": 1.0}, {"A": 1.0, "B": 1.0})
    with pytest.raises(ValueError):
        init_pools({"A": 1.0, "B": 1.0}, {"A": 1.0, "B": -1.0})


def test_maker_label():
    assert maker_label("pmm", 0.25) == "pmm@0.25"
    assert maker_label("csmm") == "csmm"


# -- config -----------------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    {"mean_swap_usd": 0.0},
    {"swaps_per_hour": -1},
    {"makers": ("csmm", "lmsr")},
    {"k_values": (0.0,)},
    {"k_values": ()},
    {"synth_kind": "sideways"},
    {"synth_kind": None},
    {"feed": "x.csv"},
    {"seed": -1},
    {"provision_fraction": 0.0},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kw)


def test_config_defaults():
    assert ScenarioConfig().swaps_per_hour == 20
    assert ScenarioConfig(synth_kind="crash").swaps_per_hour == 100
    assert ScenarioConfig(mean_swap_usd=9000.0).sd == 3000.0


# -- running ------------------------------------------------------------------------


def test_every_maker_sees_the_same_traffic():
    res = run_scenario(small_config())
    assert res.n_events == 24 * 5
    seen = defaultdict(set)
    for idx, _, maker, tin, tout, *_ in res.swaps:
        seen[maker].add((idx, tin, tout))
    reference = seen["cpmm"]
    assert len(reference) == res.n_events
    for maker, events in seen.items():
        assert events <= reference
        assert len(events) + res.refused[maker] == res.n_events


def test_csmm_fills_are_at_market_within_rounding():
    res = run_scenario(small_config(makers=("csmm", "mcsmm")))
    assert res.swaps
    for row in res.swaps:
        assert abs(row[7] - 1.0) <= 2.0 ** -52


def test_empty_run():
    res = run_scenario(small_config(swaps_per_hour=0))
    assert res.swaps == [] and res.il == []
    for row in res.summary():
        assert row[-1] == 0
        assert all(math.isnan(v) for v in row[2:5])


def test_summary_recomputes_from_streams(tmp_path):
    res = run_scenario(small_config())
    paths = write_outputs(res, tmp_path)
    ce, il = defaultdict(list), defaultdict(list)
    with open(paths["swaps"]) as fh:
        for row in csv.DictReader(fh):
            ce[row["maker"]].append(float(row["capital_efficiency"]))
    with open(paths["il"]) as fh:
        for row in csv.DictReader(fh):
            il[row["maker"]].append(float(row["impermanent_loss"]))
    with open(paths["summary"]) as fh:
        summary = list(csv.DictReader(fh))
    for row in summary:
        vals = {"capital_efficiency": ce, "impermanent_loss": il}.get(row["metric"])
        if vals is None:
            vals = {m: [abs(v - 1.0) for v in xs] for m, xs in ce.items()}
        want = quartiles(vals[row["maker"]])
        got = tuple(float(row[c]) for c in ("q1", "median", "q3"))
        assert got == want
        assert int(row["count"]) == len(vals[row["maker"]])


def test_outputs_are_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    write_outputs(run_scenario(small_config(seed=5)), a)
    write_outputs(run_scenario(small_config(seed=5)), b)
    for name in ("swaps.csv", "il.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flat_prices_csmm_pools_keep_value():
    cfg = small_config(synth_kind="flat", makers=("csmm", "mcsmm"), swaps_per_hour=10)
    feed = load_feed(cfg)
    res = run_scenario(cfg, feed)
    prices = feed.prices_at(0)
    for maker in res.maker_objects:
        by_pool = defaultdict(float)
        for unit in maker.units():
            by_pool[unit.pool] += maker.portfolio_value(unit, prices) - maker.holding_value(unit, prices)
        for pool, gap in by_pool.items():
            scale = sum(maker.holding_value(u, prices) for u in maker.units() if u.pool == pool)
            assert abs(gap) / scale < 1e-12


def test_il_records_only_touched_units():
    res = run_scenario(small_config(makers=("cpmm", "mcpmm")))
    per_swap = defaultdict(set)
    for idx, _, maker, unit, _ in res.il:
        per_swap[(maker, idx)].add(unit)
    for (maker, _), units in per_swap.items():
        assert len(units) == 1


def test_window_and_token_selection():
    cfg = small_config(tokens=("T00", "T02"), start="2021-04-08T03:00:00Z", end="2021-04-08T10:00:00Z")
    feed = load_feed(cfg)
    assert feed.tokens == ("T00", "T02") and len(feed) == 8
    res = run_scenario(cfg, feed)
    assert {r[3] for r in res.swaps} <= {"T00", "T02"}


def test_feed_file_with_gap_fails_with_timestamp(tmp_path):
    t0 = parse_timestamp("2021-04-08T00:00:00Z")
    rows = [FeedRow(t0 + timedelta(days=d), t, 1.0, 1e6, 1e9) for d in (0, 1, 3) for t in ("A", "B")]
    p = tmp_path / "gap.csv"
    write_feed(rows, p)
    with pytest.raises(FeedError, match="2021-04-10"):
        run_scenario(ScenarioConfig(feed=str(p), synth_kind=None))


def test_real_feed_file_runs(tmp_path):
    t0 = parse_timestamp("2021-04-08T00:00:00Z")
    rows = [FeedRow(t0 + timedelta(days=d), t, p * (1 + 0.1 * d), 1e8, 1e9)
            for d in range(3) for t, p in (("A", 1.0), ("B", 20.0))]
    p = tmp_path / "daily.csv"
    write_feed(rows, p)
    res = run_scenario(ScenarioConfig(feed=str(p), synth_kind=None, swaps_per_hour=2, seed=3))
    assert res.n_events == 49 * 2
    assert len(build_hourly(rows)) == 49
    assert {r[2] for r in res.swaps} >= {"cpmm", "mpmm@0.5"}
    assert CPMM in {type(m) for m in res.maker_objects}
