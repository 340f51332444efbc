"""Price/volume feed: CSV I/O, validation and hourly interpolation.

File format (one header line, ISO-8601 UTC timestamps on whole hours)::

    timestamp,token,price,daily_volume,market_cap
    2021-04-08T00:00:00Z,BTC,58000.0,4.1e10,1.08e12

Rows may be hourly or sparser (e.g. daily closes); consecutive rows of one
token may be at most ``MAX_SPACING_HOURS`` apart and the gaps are filled by
linear interpolation.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import FeedError

FEED_HEADER = ("timestamp", "token", "price", "daily_volume", "market_cap")
MAX_SPACING_HOURS = 24
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class FeedRow:
    timestamp: datetime
    token: str
    price: float
    daily_volume: float
    market_cap: float


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def hour_index(ts: datetime) -> int:
    """Whole hours since the Unix epoch; ``ts`` must sit on an hour."""
    seconds = (ts - _EPOCH).total_seconds()
    if seconds % 3600:
        raise FeedError(f"timestamp {format_timestamp(ts)} is not on a whole hour")
    return int(seconds // 3600)


def hour_to_datetime(h: int) -> datetime:
    return _EPOCH + timedelta(hours=int(h))


# -- reading and validation ----------------------------------------------------


@dataclass
class FeedDefect:
    line: Optional[int]
    message: str
    timestamp: Optional[str] = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        when = f" [{self.timestamp}]" if self.timestamp else ""
        return f"{where}{self.message}{when}"


@dataclass
class FeedReport:
    path: str
    rows: list[FeedRow] = field(default_factory=list)
    defects: list[FeedDefect] = field(default_factory=list)

    @property
    def tokens(self) -> list[str]:
        return sorted({r.token for r in self.rows})

    @property
    def time_range(self) -> Optional[tuple[datetime, datetime]]:
        if not self.rows:
            return None
        stamps = [r.timestamp for r in self.rows]
        return min(stamps), max(stamps)

    @property
    def ok(self) -> bool:
        return not self.defects


def scan_feed(path: Union[str, Path]) -> FeedReport:
    """Parse a feed file collecting every defect instead of stopping at one.

    Raises :class:`FeedError` only when the file cannot be read at all or the
    header is wrong.
    """
    report = FeedReport(str(path))
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FeedError(f"cannot read feed {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != FEED_HEADER:
            raise FeedError(f"malformed header {header!r}; expected {','.join(FEED_HEADER)}")
        line_of: dict[int, int] = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(FEED_HEADER):
                report.defects.append(FeedDefect(lineno, f"expected 5 fields, got {len(rec)}"))
                continue
            ts_text, token, *nums = (c.strip() for c in rec)
            try:
                ts = parse_timestamp(ts_text)
                hour_index(ts)
            except (ValueError, FeedError) as exc:
                report.defects.append(FeedDefect(lineno, f"bad timestamp {ts_text!r}: {exc}"))
                continue
            try:
                price, volume, cap = (float(v) for v in nums)
            except ValueError:
                report.defects.append(FeedDefect(lineno, f"non-numeric field in {nums!r}"))
                continue
            if not token:
                report.defects.append(FeedDefect(lineno, "empty token symbol", ts_text))
                continue
            bad = False
            if not (math.isfinite(price) and price > 0.0):
                report.defects.append(FeedDefect(lineno, f"non-positive price {price!r}", ts_text))
                bad = True
            if not (math.isfinite(volume) and volume >= 0.0):
                report.defects.append(FeedDefect(lineno, f"negative volume {volume!r}", ts_text))
                bad = True
            if not (math.isfinite(cap) and cap > 0.0):
                report.defects.append(FeedDefect(lineno, f"non-positive market cap {cap!r}", ts_text))
                bad = True
            if bad:
                continue
            line_of[len(report.rows)] = lineno
            report.rows.append(FeedRow(ts, token, price, volume, cap))
    report.defects.extend(_structural_defects(report.rows, line_of))
    return report


def _structural_defects(rows: Sequence[FeedRow], line_of: dict[int, int]) -> list[FeedDefect]:
    defects: list[FeedDefect] = []
    for i in range(1, len(rows)):
        if rows[i].timestamp < rows[i - 1].timestamp:
            defects.append(
                FeedDefect(line_of.get(i), "rows not sorted by timestamp",
                           format_timestamp(rows[i].timestamp))
            )
            break
    per_token: dict[str, list[int]] = {}
    for i, r in enumerate(rows):
        per_token.setdefault(r.token, []).append(i)
    if not rows:
        return defects
    start = min(r.timestamp for r in rows)
    end = max(r.timestamp for r in rows)
    for token in sorted(per_token):
        idx = sorted(per_token[token], key=lambda i: rows[i].timestamp)
        stamps = [rows[i].timestamp for i in idx]
        if stamps[0] != start:
            defects.append(FeedDefect(None, f"{token}: series starts late", format_timestamp(stamps[0])))
        if stamps[-1] != end:
            defects.append(FeedDefect(None, f"{token}: series ends early", format_timestamp(stamps[-1])))
        for a, b, i in zip(stamps, stamps[1:], idx[1:]):
            hours = (b - a).total_seconds() / 3600
            if hours == 0:
                defects.append(FeedDefect(line_of.get(i), f"{token}: duplicate timestamp",
                                          format_timestamp(b)))
            elif hours > MAX_SPACING_HOURS:
                defects.append(
                    FeedDefect(line_of.get(i),
                               f"{token}: gap of {hours:g} h after {format_timestamp(a)}",
                               format_timestamp(a + timedelta(hours=MAX_SPACING_HOURS)))
                )
    return defects


def read_feed(path: Union[str, Path]) -> list[FeedRow]:
    report = scan_feed(path)
    if report.defects:
        raise FeedError(f"{path}: {report.defects[0]}")
    return report.rows


def format_feed(rows: Iterable[FeedRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEED_HEADER)
    for r in rows:
        w.writerow([format_timestamp(r.timestamp), r.token,
                    repr(r.price), repr(r.daily_volume), repr(r.market_cap)])
    return buf.getvalue()


def write_feed(rows: Iterable[FeedRow], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_feed(rows))


# -- interpolation ---------------------------------------------------------------


def interpolate_hourly(
    timestamps: Sequence[datetime], values: Sequence[float]
) -> tuple[list[datetime], np.ndarray]:
    """Piecewise-linear hourly series through the given points.

    Knot values are reproduced exactly.
    """
    if len(timestamps) != len(values):
        raise ValueError("timestamps and values differ in length")
    if len(timestamps) < 2:
        raise FeedError("need at least two points to interpolate")
    hours = np.array([hour_index(t) for t in timestamps], dtype=np.int64)
    if np.any(np.diff(hours) <= 0):
        raise FeedError("timestamps must be strictly increasing")
    grid = np.arange(hours[0], hours[-1] + 1, dtype=np.int64)
    vals = np.interp(grid.astype(float), hours.astype(float), np.asarray(values, dtype=float))
    return [hour_to_datetime(h) for h in grid], vals


@dataclass
class HourlyFeed:
    """Gap-free per-token hourly series on a shared grid."""

    hours: np.ndarray  # hour indices since epoch
    tokens: tuple[str, ...]
    price: dict[str, np.ndarray]
    volume: dict[str, np.ndarray]
    market_cap: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.hours)

    def timestamp(self, i: int) -> datetime:
        return hour_to_datetime(int(self.hours[i]))

    def prices_at(self, i: int) -> dict[str, float]:
        return {t: float(self.price[t][i]) for t in self.tokens}

    def volumes_at(self, i: int) -> dict[str, float]:
        return {t: float(self.volume[t][i]) for t in self.tokens}

    def caps_at(self, i: int) -> dict[str, float]:
        return {t: float(self.market_cap[t][i]) for t in self.tokens}

    def window(self, start: Optional[datetime] = None, end: Optional[datetime] = None,
               tokens: Optional[Sequence[str]] = None) -> "HourlyFeed":
        lo = hour_index(start) if start else int(self.hours[0])
        hi = hour_index(end) if end else int(self.hours[-1])
        mask = (self.hours >= lo) & (self.hours <= hi)
        keep = tuple(tokens) if tokens else self.tokens
        missing = set(keep) - set(self.tokens)
        if missing:
            raise FeedError(f"tokens not in feed: {sorted(missing)}")
        return HourlyFeed(
            self.hours[mask], keep,
            {t: self.price[t][mask] for t in keep},
            {t: self.volume[t][mask] for t in keep},
            {t: self.market_cap[t][mask] for t in keep},
        )


def build_hourly(rows: Sequence[FeedRow]) -> HourlyFeed:
    """Interpolate every token onto the common hourly grid.

    Fails fast on the first gap longer than ``MAX_SPACING_HOURS`` or a series
    not spanning the whole feed.
    """
    if not rows:
        raise FeedError("empty feed")
    per_token: dict[str, list[FeedRow]] = {}
    for r in rows:
        per_token.setdefault(r.token, []).append(r)
    start = min(r.timestamp for r in rows)
    end = max(r.timestamp for r in rows)
    grid = np.arange(hour_index(start), hour_index(end) + 1, dtype=np.int64)
    price, volume, cap = {}, {}, {}
    for token in sorted(per_token):
        series = sorted(per_token[token], key=lambda r: r.timestamp)
        stamps = [r.timestamp for r in series]
        if stamps[0] != start or stamps[-1] != end:
            raise FeedError(f"{token}: series does not span the feed",)
        hours = np.array([hour_index(t) for t in stamps], dtype=np.int64)
        steps = np.diff(hours)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise FeedError(f"{token}: duplicate timestamp {format_timestamp(stamps[bad])}")
        if np.any(steps > MAX_SPACING_HOURS):
            bad = int(np.argmax(steps > MAX_SPACING_HOURS))
            raise FeedError(f"{token}: gap after {format_timestamp(stamps[bad])}")
        x = hours.astype(float)
        g = grid.astype(float)
        price[token] = np.interp(g, x, [r.price for r in series])
        volume[token] = np.interp(g, x, [r.daily_volume for r in series])
        cap[token] = np.interp(g, x, [r.market_cap for r in series])
    return HourlyFeed(grid, tuple(sorted(per_token)), price, volume, cap)
