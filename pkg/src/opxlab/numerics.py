"""High-precision numerical kernels.

All real numbers are ``mpmath.mpf`` values.  Precision is always given in
decimal digits and applied with ``mpmath.workdps``; a value carries the
precision of the context that produced it.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
from mpmath import mp, mpf

from .errors import IndexOutOfStencil, NonConvergence, PrecisionExhausted

DEFAULT_DIGITS = 120
DEFAULT_MAX_INDEX = 10**6
DEFAULT_CAP = 4096


def default_digits() -> int:
    """Working precision, overridable through ``OPXLAB_PRECISION``."""
    raw = os.environ.get("OPXLAB_PRECISION")
    if raw is None:
        return DEFAULT_DIGITS
    return int(raw)


def to_mpf(value) -> mpf:
    """Convert decimal strings, ints and mpf values without binary rounding."""
    if isinstance(value, (mpf, mpmath.mpc)):
        return +value
    if isinstance(value, float):
        # repr is the shortest decimal string that round-trips
        value = repr(value)
    return mpf(value)


def grid_step(digits: int) -> mpf:
    """Finite-difference spacing 10^(-digits/6)."""
    return mpf(10) ** (-mpf(digits) / 6)


@dataclass(frozen=True)
class Certified:
    """Result of a precision-ladder run."""

    value: object
    certified_digits: int
    precision: int


@dataclass(frozen=True)
class GridFunction:
    """Samples of a smooth function on a uniform grid."""

    grid: tuple
    values: tuple

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values differ in length")
        if len(self.grid) < 5:
            raise ValueError("a grid function needs at least 5 samples")
        h = self.grid[1] - self.grid[0]
        if h <= 0:
            raise ValueError("grid must be strictly increasing")
        tol = abs(h) * mpf(10) ** (-(mp.dps // 2))
        for left, right in zip(self.grid, self.grid[1:]):
            if abs((right - left) - h) > tol:
                raise ValueError("grid spacing is not uniform")

    @property
    def step(self) -> mpf:
        return self.grid[1] - self.grid[0]

    @property
    def center_index(self) -> int:
        return len(self.grid) // 2


def uniform_grid(center, step, points: int) -> tuple:
    if points < 5 or points % 2 == 0:
        raise ValueError("grids need an odd number (>= 5) of points")
    half = points // 2
    center = to_mpf(center)
    step = to_mpf(step)
    return tuple(center + k * step for k in range(-half, half + 1))


def sum_series(term: Callable[[int], mpf], rel_tol, max_index: int = DEFAULT_MAX_INDEX,
               start: int = 0) -> mpf:
    """Sum ``term(start) + term(start+1) + ...``.

    Stops once three consecutive terms satisfy ``|term| <= rel_tol * |S|``.
    """
    rel_tol = to_mpf(rel_tol)
    total = mpf(0)
    small = 0
    for k in range(start, start + max_index):
        value = term(k)
        total += value
        if abs(value) <= rel_tol * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise NonConvergence(f"series not converged after {max_index} terms")


def central_derivative(f: GridFunction, order: int, index: int) -> mpf:
    """Five-point central difference, built as one Richardson step on
    three-point differences with spacings h and 2h."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    n = len(f.values)
    if index < 2 or index > n - 3:
        raise IndexOutOfStencil(f"index {index} needs two neighbours on each side of a {n}-point grid")
    v = f.values
    h = f.step
    if order == 1:
        d_h = (v[index + 1] - v[index - 1]) / (2 * h)
        d_2h = (v[index + 2] - v[index - 2]) / (4 * h)
    else:
        d_h = (v[index + 1] - 2 * v[index] + v[index - 1]) / h**2
        d_2h = (v[index + 2] - 2 * v[index] + v[index - 2]) / (4 * h**2)
    return (4 * d_h - d_2h) / 3


def derivatives_at_center(grid: Sequence, values: Sequence):
    """(f, f', f'') at the centre of an odd grid."""
    gf = GridFunction(tuple(grid), tuple(values))
    c = gf.center_index
    return values[c], central_derivative(gf, 1, c), central_derivative(gf, 2, c)


# -- precision ladder -------------------------------------------------------

def _flatten(value):
    if isinstance(value, (list, tuple)):
        for item in value:
            yield from _flatten(item)
    else:
        yield value


def relative_disagreement(lo, hi) -> mpf:
    """Largest componentwise relative difference between two runs.

    Components that vanish in the high-precision run are compared absolutely.
    """
    worst = mpf(0)
    for a, b in zip(_flatten(lo), _flatten(hi)):
        diff = abs(a - b)
        scale = abs(b)
        d = diff / scale if scale else diff
        if d > worst:
            worst = d
    return worst


def digits_from_disagreement(d, ceiling: int) -> int:
    if d == 0:
        return ceiling
    return max(0, min(ceiling, int(math.floor(-float(mpmath.log10(d))))))


def precision_ladder(computation: Callable[[int], object], p0: int, digits: int | None = None,
                     cap: int = DEFAULT_CAP,
                     disagreement: Callable[[object, object], mpf] = relative_disagreement) -> Certified:
    """Run ``computation`` at p and 2p digits, doubling until the two runs
    agree to ``digits`` decimal digits (default ``p0 - 2``).

    The returned value is the higher-precision run; ``certified_digits`` is
    the agreement between the last two runs, capped at the lower precision.
    """
    if digits is None:
        digits = p0 - 2
    p = p0
    with mp.workdps(p):
        lo = computation(p)
    while True:
        if 2 * p > cap:
            raise PrecisionExhausted(f"could not certify {digits} digits below the {cap}-digit cap")
        with mp.workdps(2 * p):
            hi = computation(2 * p)
            d = disagreement(lo, hi)
        cert = digits_from_disagreement(d, p)
        if cert >= digits:
            return Certified(hi, cert, 2 * p)
        p *= 2
        lo = hi
