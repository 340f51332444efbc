"""Independent reference computations used as test oracles.

Nothing here imports the package's curve or recovery code: each helper
evaluates the curve formulas directly (or brute-forces them), so a shared
bug cannot make an implementation agree with its own oracle.
"""
from __future__ import annotations

import math

import numpy as np


def short_base_quote(b, b0, q0, p_b, p_q, k):
    """Quote balance on the short-base branch, written straight from the curve."""
    return -(p_b / p_q) * (b - b0) * (1.0 - k + k * b0 / b) + q0


def short_quote_base(q, q0, b0, p_b, p_q, k):
    return -(p_q / p_b) * (q - q0) * (1.0 - k + k * q0 / q) + b0


def short_base_slope(b, b0, p_b, p_q, k):
    """|dQ/dB| on the short-base branch."""
    return p_b * (b0 * b0 * k - (k - 1.0) * b * b) / (p_q * b * b)


def short_quote_slope(q, q0, p_b, p_q, k):
    """|dB/dQ| on the short-quote branch."""
    return p_q * (q0 * q0 * k - (k - 1.0) * q * q) / (p_b * q * q)


def short_quote_q_per_b_closed(b, b0, q0, p_b, p_q, k):
    """|dQ/dB| on the short-quote branch from the closed form in B.

    Evaluated directly; it loses digits near equilibrium, which is why the
    package computes the same quantity as a reciprocal instead.
    """
    lin = p_q * q0 * (1.0 - 2.0 * k) + p_b * (b0 - b)
    disc = lin * lin - 4.0 * p_q * p_q * q0 * q0 * k * (k - 1.0)
    return abs((p_b + p_b * lin / math.sqrt(disc)) / (2.0 * p_q * (k - 1.0)))


def central_difference(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def bisect(f, lo, hi, iters=200):
    """Plain bisection on a sign change; returns the midpoint of the final bracket."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or mid in (lo, hi):
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def csmm_line_output(dx, p_b, p_q):
    """Output along the k = 0 line Q + (P_B/P_Q) B = const."""
    return (p_b / p_q) * dx


def cpmm_limit_new_quote(b_new, b0, q0, p_b, p_q):
    """Quote balance on the k = 1 piecewise hyperbola at base balance ``b_new``.

    Short-base side: B (Q - Q0 + r B0) = r B0^2.  Short-quote side is the
    mirror image solved for Q: Q (B - B0 + Q0 / r) = Q0^2 / r.
    """
    r = p_b / p_q
    if b_new <= b0:
        return q0 - r * b0 + r * b0 * b0 / b_new
    return (q0 * q0 / r) / (b_new - b0 + q0 / r)


def integrated_crossing_output(b, q, b0, q0, k, dx, steps=1_000_000):
    """Output of a base-in trade by numerically integrating marginal rates.

    Unit prices.  The short-base leg integrates |dQ/dB| in B up to the
    anchor; the short-quote leg integrates |dB/dQ| downward in Q with the
    trapezoid rule and interpolates where the accumulated base input reaches
    the remainder of ``dx``.
    """
    to_anchor = min(dx, b0 - b)
    grid = np.linspace(b, b + to_anchor, steps + 1)
    rate = (b0 * b0 * k - (k - 1.0) * grid * grid) / (grid * grid)
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    out = float(trapezoid(rate, grid))
    rest = dx - to_anchor
    if rest <= 0.0:
        return out
    # base gained per quote released, from q0 downward
    qs = np.linspace(q0, q0 * 0.5, steps + 1)
    dbdq = (q0 * q0 * k - (k - 1.0) * qs * qs) / (qs * qs)
    seg = 0.5 * (dbdq[1:] + dbdq[:-1]) * (qs[:-1] - qs[1:])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] < rest:
        raise ValueError("integration window too short")
    q_end = float(np.interp(rest, cum, qs))
    return out + (q0 - q_end)


def recovered_anchor_literal(b, q, q0, ratio_new, k):
    """New short-token anchor from the unrationalised recovery formula."""
    return b + b / (2.0 * k) * (math.sqrt(1.0 + 4.0 * k * (q - q0) / (ratio_new * b)) - 1.0)


def retarget_grid(b, q, b0, q0, b_r, q_r, p_b, p_q, k, points=1_000_000):
    """Brute-force minimum of the deposit-distance objective on a uniform grid.

    Returns (objective, b0_new, q0_new).  The free anchor runs over
    [1e-12 * balance, balance] of its own token; the other anchor follows
    from the unrationalised recovery relation.
    """
    if b0 / b_r < q0 / q_r:
        free = np.linspace(1e-12 * q, q, points)
        dep = b + b / (2.0 * k) * (np.sqrt(1.0 + 4.0 * k * (q - free) / ((p_b / p_q) * b)) - 1.0)
        nb0, nq0 = dep, free
    else:
        free = np.linspace(1e-12 * b, b, points)
        dep = q + q / (2.0 * k) * (np.sqrt(1.0 + 4.0 * k * (b - free) / ((p_q / p_b) * q)) - 1.0)
        nb0, nq0 = free, dep
    obj = (1.0 - nb0 / b_r) ** 2 + (1.0 - nq0 / q_r) ** 2
    i = int(np.argmin(obj))
    return float(obj[i]), float(nb0[i]), float(nq0[i])


def random_short_base_state(rng, k, p_b=1.0, p_q=1.0, lo=0.05):
    """(b, q, b0, q0) on the short-base branch."""
    b0 = float(rng.uniform(10.0, 1e4))
    q0 = float(rng.uniform(10.0, 1e4))
    b = b0 * float(rng.uniform(lo, 1.0))
    return b, short_base_quote(b, b0, q0, p_b, p_q, k), b0, q0


def random_short_quote_state(rng, k, p_b=1.0, p_q=1.0, lo=0.05):
    b0 = float(rng.uniform(10.0, 1e4))
    q0 = float(rng.uniform(10.0, 1e4))
    q = q0 * float(rng.uniform(lo, 1.0))
    return short_quote_base(q, q0, b0, p_b, p_q, k), q, b0, q0
