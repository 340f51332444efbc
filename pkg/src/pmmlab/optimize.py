"""Bounded scalar minimization used by the MPMM retargeting step."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScalarMin:
    x: float
    fun: float
    iterations: int


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> ScalarMin:
    """Golden-section search on ``[lo, hi]``.

    ``xtol`` is relative to the interval width.  Both endpoints are evaluated
    as candidates, so monotone objectives return the boundary exactly.
    """
    if not lo <= hi:
        raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
    f_lo, f_hi = f(lo), f(hi)
    a, b = lo, hi
    tol = xtol * max(hi - lo, abs(hi) * 1e-16)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    if f_lo <= fx:
        x, fx = lo, f_lo
    if f_hi < fx:
        x, fx = hi, f_hi
    return ScalarMin(x, fx, it)


def bracketed_minimize(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    n_scan: int = 32,
    xtol: float = 1e-12,
) -> ScalarMin:
    """Coarse scan to pick the best cell, then golden-section inside it.

    The scan guards against objectives that are not unimodal over the whole
    range.
    """
    if n_scan < 2:
        raise ValueError("n_scan must be at least 2")
    step = (hi - lo) / n_scan
    grid = [lo + i * step for i in range(n_scan)] + [hi]
    vals = [f(x) for x in grid]
    best = min(range(len(grid)), key=vals.__getitem__)
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, n_scan)]
    res = golden_section(f, left, right, xtol=xtol)
    if vals[best] < res.fun:
        return ScalarMin(grid[best], vals[best], res.iterations)
    return res
