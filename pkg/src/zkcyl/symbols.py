"""Dispersion symbol, resonance function and brute-force lattice counting."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, astuple

import numpy as np

PARABOLA_C = 4.0
PREIMAGE_C = 2.0


class BoundViolation(AssertionError):
    """A counting bound failed on a concrete instance."""


class InconclusiveWindow(ValueError):
    """The enumeration window does not contain every solution."""


@dataclass(frozen=True)
class Frequency:
    xi: float
    q: float

    @property
    def weighted_mod2(self):
        return weighted_mod2(self.xi, self.q)


def weighted_mod2(xi, q):
    return 3 * np.square(xi) + np.square(q)


def sigma(xi, q):
    """``xi^3 + xi q^2``; accepts scalars, arrays or a :class:`Frequency`."""
    if isinstance(xi, Frequency):
        xi, q = xi.xi, xi.q
    return xi**3 + xi * q**2


def resonance(xi1, xi2, q1, q2):
    return 3 * xi1 * xi2 * (xi1 + xi2) + xi2 * q1**2 + xi1 * q2**2 + 2 * (xi1 + xi2) * q1 * q2


def resonance_by_difference(xi1, xi2, q1, q2):
    return sigma(xi1 + xi2, q1 + q2) - sigma(xi1, q1) - sigma(xi2, q2)


def resonance_d1(xi1, xi, q1, q):
    """``weighted_mod2(xi1, q1) - weighted_mod2(xi - xi1, q - q1)``.

    This is minus the xi1-derivative of ``resonance(xi1, xi - xi1, q1, q - q1)``;
    only its size enters the counting arguments.
    """
    return 3 * xi1**2 + q1**2 - 3 * (xi - xi1) ** 2 - (q - q1) ** 2


def resonance_d2(xi):
    """xi1-derivative of :func:`resonance_d1`, i.e. ``6 xi``."""
    return 6 * xi


@dataclass(frozen=True)
class CountReport:
    a: float
    b: float
    c: float
    lo: float
    hi: float
    lam: float
    count: int
    bound: float

    FIELDS = ("a", "b", "c", "lo", "hi", "lambda", "count", "bound")

    def csv_row(self):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow([repr(v) if isinstance(v, float) else v for v in astuple(self)])
        return buf.getvalue()

    @property
    def holds(self):
        return self.count <= self.bound


def parabola_window(a, b, c, interval):
    """Half-width ``Q`` such that ``|q| > Q`` forces ``a q^2 + b q + c`` outside ``interval``."""
    lo, hi = interval
    reach = max(abs(lo), abs(hi)) + abs(c) + b * b / (4 * abs(a))
    return abs(b) / (2 * abs(a)) + math.sqrt(reach / abs(a)) + 1.0


def count_parabola(a, b, c, interval, lam, qmax=None) -> CountReport:
    """Exact count of ``q in Z/lam`` with ``a q^2 + b q + c`` in ``interval``.

    The companion bound is ``4 lam (sqrt(|I| / |a|) + 1)``.
    """
    if a == 0:
        raise ValueError("leading coefficient a must be nonzero")
    if lam < 1:
        raise ValueError(f"lam must be >= 1, got {lam}")
    lo, hi = map(float, interval)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("interval must be finite")
    needed = parabola_window(a, b, c, (lo, hi))
    if qmax is None:
        qmax = needed
    elif qmax < needed:
        raise InconclusiveWindow(f"window |q| <= {qmax} smaller than required {needed:.6g}")
    length = max(hi - lo, 0.0)
    bound = PARABOLA_C * lam * (math.sqrt(length / abs(a)) + 1.0)
    if hi < lo:
        return CountReport(a, b, c, lo, hi, lam, 0, bound)
    jmax = int(math.ceil(qmax * lam))
    q = np.arange(-jmax, jmax + 1) / lam
    vals = a * q * q + b * q + c
    count = int(np.count_nonzero((vals >= lo) & (vals <= hi)))
    return CountReport(float(a), float(b), float(c), lo, hi, float(lam), count, bound)


def count_graph_set(predicate, xwindow, qset, lam, row_bound) -> int:
    """Count cells of a set in ``xwindow x qset`` and check the strip bound.

    ``predicate(xi, q)`` is evaluated on the broadcast product grid and must
    return booleans.  Each fixed-``q`` row may contain at most ``row_bound``
    cells; the total is then at most ``lam * row_bound * (|I| + 1)`` where
    ``I`` is the hull of the occupied ``q`` values.
    """
    xi = np.asarray(xwindow, float)[:, None]
    qs = np.asarray(qset, float)[None, :]
    mask = np.broadcast_to(np.asarray(predicate(xi, qs), bool), (xi.shape[0], qs.shape[1]))
    per_row = mask.sum(axis=0)
    if np.any(per_row > row_bound):
        worst = float(qs[0, np.argmax(per_row)])
        raise ValueError(f"row q={worst} holds {per_row.max()} cells > {row_bound}")
    count = int(per_row.sum())
    if count == 0:
        return 0
    occupied = qs[0, per_row > 0]
    width = float(occupied.max() - occupied.min())
    bound = lam * row_bound * (width + 1)
    if count > bound:
        raise BoundViolation(f"count {count} exceeds lam*C*(|I|+1) = {bound}")
    return count


def preimage_measure(f, J, I, dmin, n=4096, rtol=1e-3, max_refine=12, check_derivative=True):
    """Measure of ``{x in J : f(x) in I}`` by uniform sampling with refinement.

    Sampling doubles until two consecutive estimates agree to ``rtol`` (or to
    one cell width).  The result is checked against ``2 |I| / dmin``.
    """
    a, b = map(float, J)
    lo, hi = map(float, I)
    if dmin <= 0:
        raise ValueError("dmin must be positive")

    def estimate(m):
        # midpoint rule on the indicator
        x = a + (np.arange(m) + 0.5) * (b - a) / m
        y = f(x)
        return np.count_nonzero((y >= lo) & (y <= hi)) * (b - a) / m, x, y

    prev, x, y = estimate(n)
    for _ in range(max_refine):
        n *= 2
        cur, x, y = estimate(n)
        if abs(cur - prev) <= max(rtol * abs(cur), 2 * (b - a) / n):
            break
        prev = cur
    else:
        raise ValueError(f"preimage measure not converged after {max_refine} refinements")
    if check_derivative:
        slope = np.abs(np.diff(y)) / np.diff(x)
        if slope.min() < dmin * (1 - 1e-6):
            raise ValueError(f"supplied dmin={dmin} exceeds sampled inf|f'|={slope.min():.6g}")
    bound = PREIMAGE_C * max(hi - lo, 0.0) / dmin
    if cur > bound + 2 * (b - a) / n:
        raise BoundViolation(f"preimage measure {cur} exceeds {bound}")
    return float(cur)
