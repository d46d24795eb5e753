"""Coupled scalar processes on different discrete time scales.

Each process i advances on its own clock c_i >= 2; on the global clock
d = lcm(c_1..c_M) the state satisfies the self-similar recurrence
x_i(n) = sum_j a_ij x_j(n/c_j) + sum_j b_ij u_j(n/c_j). Indices outside the
recurrence domain (n = 0 or d not dividing n) are boundary data supplied by
the caller. Process indices are 1-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GlobalClock",
    "global_clock",
    "BoundaryDataError",
    "MultirateSystem",
    "eval_state",
    "trajectory_on_grid",
    "constant_function",
    "index_function",
    "table_function",
]


@dataclass(frozen=True)
class GlobalClock:
    """Common time base: d = lcm(clocks), factors f_i = d / c_i."""

    d: int
    factors: tuple


def global_clock(clocks) -> GlobalClock:
    clocks = tuple(int(c) for c in clocks)
    if not clocks:
        raise ValueError("need at least one clock")
    for c in clocks:
        if c < 2:
            raise ValueError(f"clocks must be integers larger than one, got {c}")
    d = math.lcm(*clocks)
    return GlobalClock(d, tuple(d // c for c in clocks))


class BoundaryDataError(LookupError):
    """A boundary (or input) value needed by the recurrence is missing."""

    def __init__(self, process, index, what="boundary"):
        self.process = process
        self.index = index
        super().__init__(f"missing {what} value for process {process} at index {index}")


class MultirateSystem:
    """Validated multirate recurrence: coupling A (and optionally B with an
    input function), per-process clocks, and a boundary function.

    boundary and input are callables (process, index) -> real with 1-based
    process numbers; a missing value should raise LookupError, which
    evaluation wraps into BoundaryDataError naming (process, index).
    """

    __slots__ = ("A", "B", "clocks", "clock", "boundary", "input")

    def __init__(self, A, clocks, boundary, B=None, input=None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be a square matrix, got shape {list(A.shape)}")
        if not np.isfinite(A).all():
            raise ValueError("A entries must be finite")
        m = A.shape[0]
        clock = global_clock(clocks)
        if len(clock.factors) != m:
            raise ValueError(f"need {m} clocks for {m} processes, got {len(clock.factors)}")
        if not callable(boundary):
            raise TypeError("boundary must be callable (process, index) -> real")
        if (B is None) != (input is None):
            raise ValueError("B and input must be given together or both omitted")
        if B is not None:
            B = np.asarray(B, dtype=float)
            if B.shape != (m, m):
                raise ValueError(f"B must be {m}x{m} like A, got shape {list(B.shape)}")
            if not np.isfinite(B).all():
                raise ValueError("B entries must be finite")
            if not callable(input):
                raise TypeError("input must be callable (process, index) -> real")
        self.A = A
        self.B = B
        self.clocks = tuple(int(c) for c in clocks)
        self.clock = clock
        self.boundary = boundary
        self.input = input

    @property
    def process_count(self) -> int:
        return self.A.shape[0]


def _lookup(func, process, index, what):
    try:
        value = func(process, index)
    except LookupError:
        raise BoundaryDataError(process, index, what) from None
    if value is None:
        raise BoundaryDataError(process, index, what)
    return float(value)


def _eval(system, i, n, cache):
    key = (i, n)
    if key in cache:
        return cache[key]
    d = system.clock.d
    if n > 0 and n % d == 0:
        total = 0.0
        for j in range(1, system.process_count + 1):
            sub = n // system.clocks[j - 1]
            total += system.A[i - 1, j - 1] * _eval(system, j, sub, cache)
        if system.B is not None:
            for j in range(1, system.process_count + 1):
                sub = n // system.clocks[j - 1]
                total += system.B[i - 1, j - 1] * _lookup(system.input, j, sub, "input")
        value = float(total)
    else:
        value = _lookup(system.boundary, i, n, "boundary")
    cache[key] = value
    return value


def eval_state(system, i, n, cache=None) -> float:
    """x_i(n) by demand-driven memoized recursion.

    The recurrence applies exactly when n > 0 and d | n; every other index,
    including n = 0, is boundary data. Pass the same dict as `cache` across
    calls to share the memo.
    """
    i = int(i)
    n = int(n)
    if not 1 <= i <= system.process_count:
        raise ValueError(f"process must be in 1..{system.process_count}, got {i}")
    if n < 0:
        raise ValueError(f"index must be >= 0, got {n}")
    if cache is None:
        cache = {}
    return _eval(system, i, n, cache)


def trajectory_on_grid(system, horizon) -> np.ndarray:
    """States at the global ticks n = k*d for k = 0..horizon.

    Returns an array of shape (horizon+1, M); one memo cache is shared
    across the whole sweep.
    """
    horizon = int(horizon)
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    cache = {}
    d = system.clock.d
    m = system.process_count
    rows = np.empty((horizon + 1, m))
    for k in range(horizon + 1):
        for i in range(1, m + 1):
            rows[k, i - 1] = _eval(system, i, k * d, cache)
    return rows


def constant_function(values):
    """(process, index) -> fixed value; scalar or one value per process."""
    if np.ndim(values) == 0:
        value = float(values)
        return lambda i, n: value
    table = [float(v) for v in values]

    def lookup(i, n):
        return table[i - 1]

    return lookup


def index_function():
    """(process, index) -> index, the x_i(n) = n boundary of the worked example."""
    return lambda i, n: float(n)


def table_function(entries):
    """(process, index) -> entries[(process, index)], missing keys a hard error.

    `entries` maps (process, index) pairs to reals; lookups outside the table
    raise LookupError so evaluation reports the missing (process, index).
    """
    table = {(int(i), int(n)): float(v) for (i, n), v in dict(entries).items()}

    def lookup(i, n):
        return table[(i, n)]

    return lookup
