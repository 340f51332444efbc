"""Six market makers behind one swap interface.

Pairwise makers (CSMM, CPMM, PMM) keep one pool per unordered token pair.
Multi-token makers (MCSMM, MCPMM, MPMM) keep every token in one shared pool
and trade pairwise inside it.  ``quote`` and ``execute`` share a single
planning step, so a preview always equals the executed output bit for bit,
and a refused swap never touches state.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Mapping, Optional, Union

from .curve import OracleQuote, PairCurveState, PmmParams, Side, swap_exact_in
from .errors import RetargetInfeasible, SwapRefused
from .recovery import DepositRecord, mpmm_retarget, pair_k, pmm_recover

PriceMap = Mapping[str, float]
PairKey = tuple[str, str]
MULTI_POOL = "pool"


def pair_key(a: str, b: str) -> PairKey:
    return (a, b) if a < b else (b, a)


def pool_label(key: PairKey) -> str:
    return f"{key[0]}/{key[1]}"


@dataclass(frozen=True)
class PoolAccountingUnit:
    """One "pool" for impermanent-loss purposes."""

    maker: str
    pool: str
    tokens: tuple[str, ...]

    @property
    def unit_id(self) -> str:
        if len(self.tokens) == 1:
            return f"{self.pool}:{self.tokens[0]}"
        return self.pool


@dataclass(frozen=True)
class Fill:
    maker: str
    pool: str
    token_in: str
    token_out: str
    amount_in: float
    amount_out: float


def market_output(amount_in: float, p_in: float, p_out: float) -> float:
    """Correctly rounded output of a swap executed exactly at the market rate."""
    return float(Fraction(amount_in) * Fraction(p_in) / Fraction(p_out))


def cp_output(x: float, y: float, dx: float) -> float:
    """Constant-product output for ``dx`` entering a pair with reserves (x, y)."""
    return y * dx / (x + dx)


class Maker(ABC):
    """Common surface: preview, execute, and IL accounting."""

    kind = ""

    def __init__(self, tokens: Iterable[str], prices0: PriceMap, name: Optional[str] = None):
        self.tokens = tuple(sorted(tokens))
        if len(set(self.tokens)) != len(self.tokens) or len(self.tokens) < 2:
            raise ValueError("need at least two distinct tokens")
        self._check_prices(prices0)
        self.prices0 = {t: float(prices0[t]) for t in self.tokens}
        self.name = name or self.kind

    # -- subclass hooks ----------------------------------------------------
    @abstractmethod
    def _plan(
        self, token_in: str, token_out: str, amount_in: float, prices: PriceMap
    ) -> tuple[str, float, Callable[[], None]]:
        """Return (pool label, amount_out, commit) without mutating state."""

    @abstractmethod
    def units(self) -> list[PoolAccountingUnit]:
        ...

    @abstractmethod
    def _balances(self, pool: str) -> Mapping[str, float]:
        ...

    @abstractmethod
    def _initial(self, pool: str) -> Mapping[str, float]:
        ...

    @abstractmethod
    def touched_units(self, token_in: str, token_out: str) -> list[PoolAccountingUnit]:
        """Accounting units whose balances a swap between the tokens changes."""

    # -- public API --------------------------------------------------------
    def quote(self, token_in: str, token_out: str, amount_in: float, prices: PriceMap) -> float:
        self._validate(token_in, token_out, amount_in, prices)
        return self._plan(token_in, token_out, amount_in, prices)[1]

    def execute(self, token_in: str, token_out: str, amount_in: float, prices: PriceMap) -> Fill:
        self._validate(token_in, token_out, amount_in, prices)
        pool, out, commit = self._plan(token_in, token_out, amount_in, prices)
        commit()
        return Fill(self.name, pool, token_in, token_out, amount_in, out)

    def portfolio_value(self, unit: PoolAccountingUnit, prices: PriceMap) -> float:
        bal = self._balances(unit.pool)
        return math.fsum(bal[t] * prices[t] for t in unit.tokens)

    def holding_value(self, unit: PoolAccountingUnit, prices: PriceMap) -> float:
        init = self._initial(unit.pool)
        return math.fsum(init[t] * prices[t] for t in unit.tokens)

    def impermanent_loss(self, unit: PoolAccountingUnit, prices: PriceMap) -> float:
        h0 = self.holding_value(unit, self.prices0)
        return (self.portfolio_value(unit, prices) - self.holding_value(unit, prices)) / h0

    # -- helpers -------------------------------------------------------------
    def _check_prices(self, prices: PriceMap) -> None:
        for t in self.tokens:
            p = prices.get(t) if hasattr(prices, "get") else prices[t]
            if p is None or not (math.isfinite(p) and p > 0.0):
                raise ValueError(f"price for {t!r} missing or non-positive")

    def _validate(self, token_in: str, token_out: str, amount_in: float, prices: PriceMap) -> None:
        if token_in == token_out:
            raise ValueError("token_in and token_out must differ")
        for t in (token_in, token_out):
            if t not in self.prices0:
                raise ValueError(f"unknown token {t!r}")
        if not (math.isfinite(amount_in) and amount_in > 0.0):
            raise ValueError(f"amount_in must be positive, got {amount_in!r}")
        self._check_prices(prices)


# -- pairwise makers -----------------------------------------------------------


class _PairwiseMaker(Maker):
    """One pool per unordered token pair; each pool maps token -> balance."""

    def __init__(
        self,
        pools: Mapping[PairKey, Mapping[str, float]],
        prices0: PriceMap,
        name: Optional[str] = None,
    ):
        tokens = sorted({t for key in pools for t in key})
        super().__init__(tokens, prices0, name)
        self.pools: dict[PairKey, dict[str, float]] = {}
        for raw_key, bal in pools.items():
            key = pair_key(*raw_key)
            self.pools[key] = {t: float(bal[t]) for t in key}
            for t in key:
                if not self.pools[key][t] > 0.0:
                    raise ValueError(f"deposit of {t!r} in {key} must be positive")
        self.initial = {key: dict(bal) for key, bal in self.pools.items()}
        self._labels = {pool_label(key): key for key in self.pools}

    def _pool(self, a: str, b: str) -> dict[str, float]:
        try:
            return self.pools[pair_key(a, b)]
        except KeyError:
            raise ValueError(f"no pool for pair {a}/{b}") from None

    def _balances(self, pool: str) -> Mapping[str, float]:
        return self.pools[self._labels[pool]]

    def _initial(self, pool: str) -> Mapping[str, float]:
        return self.initial[self._labels[pool]]

    def units(self) -> list[PoolAccountingUnit]:
        return [u for key in self.pools for u in self._pair_units(key)]

    def touched_units(self, token_in: str, token_out: str) -> list[PoolAccountingUnit]:
        return self._pair_units(pair_key(token_in, token_out))

    def _pair_units(self, key: PairKey) -> list[PoolAccountingUnit]:
        # single-token provision: every token of every pair is its own unit
        return [PoolAccountingUnit(self.name, pool_label(key), (t,)) for t in key]


class CSMM(_PairwiseMaker):
    kind = "csmm"

    def _plan(self, token_in, token_out, amount_in, prices):
        pool = self._pool(token_in, token_out)
        out = market_output(amount_in, prices[token_in], prices[token_out])
        if out > pool[token_out]:
            raise SwapRefused(f"{self.name}: {token_out} reserve too small")

        def commit() -> None:
            pool[token_in] += amount_in
            pool[token_out] -= out

        return pool_label(pair_key(token_in, token_out)), out, commit


class CPMM(_PairwiseMaker):
    kind = "cpmm"

    def _pair_units(self, key: PairKey) -> list[PoolAccountingUnit]:
        return [PoolAccountingUnit(self.name, pool_label(key), key)]

    def _plan(self, token_in, token_out, amount_in, prices):
        pool = self._pool(token_in, token_out)
        x, y = pool[token_in], pool[token_out]
        out = cp_output(x, y, amount_in)

        def commit() -> None:
            pool[token_in] = x + amount_in
            pool[token_out] = y - out

        return pool_label(pair_key(token_in, token_out)), out, commit


class PMM(_PairwiseMaker):
    """Pairwise PMM pools; base token of each pool is the lexically smaller one.

    Anchors start at the deposits.  Recovery runs before a trade only when the
    oracle ratio of that pair moved since its previous trade.
    """

    kind = "pmm"

    def __init__(self, pools, prices0, k: float, name: Optional[str] = None):
        super().__init__(pools, prices0, name)
        self.params = PmmParams(k)
        self.anchors = {key: dict(bal) for key, bal in self.pools.items()}
        self.last_ratio = {key: prices0[key[0]] / prices0[key[1]] for key in self.pools}

    def state(self, key: PairKey) -> PairCurveState:
        base, quote = key
        bal, anc = self.pools[key], self.anchors[key]
        return PairCurveState(bal[base], bal[quote], anc[base], anc[quote])

    def _plan(self, token_in, token_out, amount_in, prices):
        key = pair_key(token_in, token_out)
        if key not in self.pools:
            raise ValueError(f"no pool for pair {token_in}/{token_out}")
        base, quote = key
        oracle = OracleQuote(prices[base], prices[quote])
        state = self.state(key)
        ratio = oracle.ratio
        if ratio != self.last_ratio[key]:
            res = pmm_recover(state, oracle, self.params)
            state = PairCurveState(state.b, state.q, res.b0_new, res.q0_new)
        side = Side.BASE_IN if token_in == base else Side.QUOTE_IN
        receipt = swap_exact_in(state, oracle, self.params, side, amount_in)
        new = receipt.new_state

        def commit() -> None:
            self.pools[key] = {base: new.b, quote: new.q}
            self.anchors[key] = {base: new.b0, quote: new.q0}
            self.last_ratio[key] = ratio

        return pool_label(key), receipt.amount_out, commit


# -- multi-token makers ----------------------------------------------------------


class _MultiMaker(Maker):
    """All tokens share a single pool."""

    def __init__(self, balances: Mapping[str, float], prices0: PriceMap, name: Optional[str] = None):
        super().__init__(balances.keys(), prices0, name)
        self.balances = {t: float(balances[t]) for t in self.tokens}
        for t, v in self.balances.items():
            if not v > 0.0:
                raise ValueError(f"deposit of {t!r} must be positive")
        self.deposits = dict(self.balances)

    def _balances(self, pool: str) -> Mapping[str, float]:
        return self.balances

    def _initial(self, pool: str) -> Mapping[str, float]:
        return self.deposits

    def units(self) -> list[PoolAccountingUnit]:
        return [PoolAccountingUnit(self.name, MULTI_POOL, (t,)) for t in self.tokens]

    def touched_units(self, token_in: str, token_out: str) -> list[PoolAccountingUnit]:
        return [u for u in self.units() if u.tokens[0] in (token_in, token_out)]


class MCSMM(_MultiMaker):
    kind = "mcsmm"

    def _plan(self, token_in, token_out, amount_in, prices):
        bal = self.balances
        out = market_output(amount_in, prices[token_in], prices[token_out])
        if out > bal[token_out]:
            raise SwapRefused(f"{self.name}: {token_out} reserve too small")

        def commit() -> None:
            bal[token_in] += amount_in
            bal[token_out] -= out

        return MULTI_POOL, out, commit


class MCPMM(_MultiMaker):
    """Multi-token constant product; other balances are untouched by a pair
    trade, so conserving the pair product conserves the global one."""

    kind = "mcpmm"

    def units(self) -> list[PoolAccountingUnit]:
        return [PoolAccountingUnit(self.name, MULTI_POOL, self.tokens)]

    def touched_units(self, token_in: str, token_out: str) -> list[PoolAccountingUnit]:
        return self.units()

    def log_product(self) -> float:
        return math.fsum(math.log(v) for v in self.balances.values())

    def _plan(self, token_in, token_out, amount_in, prices):
        bal = self.balances
        x, y = bal[token_in], bal[token_out]
        out = cp_output(x, y, amount_in)

        def commit() -> None:
            bal[token_in] = x + amount_in
            bal[token_out] = y - out

        return MULTI_POOL, out, commit


class MPMM(_MultiMaker):
    """Multi-token PMM with per-token anchors, deposits and k.

    Every trade first retargets the traded pair's anchors toward the
    deposits; if that search fails the single-pair PMM recovery is used.
    """

    kind = "mpmm"

    def __init__(
        self,
        balances: Mapping[str, float],
        prices0: PriceMap,
        k: Union[float, Mapping[str, float]],
        name: Optional[str] = None,
    ):
        super().__init__(balances, prices0, name)
        if isinstance(k, Mapping):
            self.k = {t: float(k[t]) for t in self.tokens}
        else:
            self.k = {t: float(k) for t in self.tokens}
        for v in self.k.values():
            PmmParams(v)
        self.anchors = dict(self.balances)
        self.fallbacks = 0

    def _plan(self, token_in, token_out, amount_in, prices):
        bal, anc = self.balances, self.anchors
        params = PmmParams(pair_k(self.k[token_in], self.k[token_out]))
        oracle = OracleQuote(prices[token_in], prices[token_out])
        b, q = bal[token_in], bal[token_out]
        fallback = False
        try:
            res = mpmm_retarget(
                b, q, anc[token_in], anc[token_out],
                DepositRecord(self.deposits[token_in], self.deposits[token_out]),
                oracle, params,
            )
        except RetargetInfeasible:
            fallback = True
            res = pmm_recover(PairCurveState(b, q, anc[token_in], anc[token_out]), oracle, params)
        state = PairCurveState(b, q, res.b0_new, res.q0_new)
        receipt = swap_exact_in(state, oracle, params, Side.BASE_IN, amount_in)
        new = receipt.new_state

        def commit() -> None:
            bal[token_in], bal[token_out] = new.b, new.q
            anc[token_in], anc[token_out] = new.b0, new.q0
            self.fallbacks += fallback

        return MULTI_POOL, receipt.amount_out, commit


MAKER_KINDS = ("csmm", "cpmm", "pmm", "mcsmm", "mcpmm", "mpmm")
K_DEPENDENT = ("pmm", "mpmm")


def all_pairs(tokens: Iterable[str]) -> list[PairKey]:
    return [pair_key(a, b) for a, b in combinations(sorted(tokens), 2)]
