"""Unit-speed vertical flow under a piecewise-constant roof.

The phase space is the region under the graph of a positive step function
``r`` on [0, 1): a point ``(a, b)`` with ``0 <= b < r(a)`` rises with unit
speed, and on reaching the roof it is identified with ``(S a, 0)`` where
``S`` is the base map.  Piecewise-constant roofs make every event time
exact, so time evolution needs no root finding: a trajectory is a finite
list of vertical runs separated by roof crossings.

Heights that land exactly on the roof are normalised eagerly to the base
of the next column, keeping the strict invariant ``height < roof`` at all
times.  Backward time is out of scope; negative durations are rejected.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterator

from .base_systems import UnitIntervalMap, circle_distance

MIN_ROOF = 1e-9


@dataclass(frozen=True)
class Roof:
    """Positive step function on [0, 1): ``values[j]`` on its j-th piece."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("roof breakpoints must run from 0.0 to 1.0")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise ValueError("roof breakpoints must be strictly increasing")
        if len(self.values) != len(bp) - 1:
            raise ValueError("roof needs one value per piece")
        if any(not math.isfinite(v) or v < MIN_ROOF for v in self.values):
            raise ValueError(f"roof values must be finite and >= {MIN_ROOF}")

    @classmethod
    def constant(cls, height: float) -> "Roof":
        return cls((0.0, 1.0), (height,))

    def value_at(self, a: float) -> float:
        return self.values[bisect_right(self.breakpoints, a) - 1]

    @property
    def min_value(self) -> float:
        return min(self.values)

    @property
    def max_value(self) -> float:
        return max(self.values)


@dataclass(frozen=True)
class FlowPoint:
    """Phase-space point: base position and height above it."""

    base_pos: float
    height: float


@dataclass(frozen=True)
class TrajectorySegment:
    """One vertical run: rise from ``start_height`` for ``duration``."""

    base_pos: float
    start_height: float
    duration: float


@dataclass(frozen=True)
class SpecialFlow:
    """Base map plus roof; the flow's invariant measure is area."""

    base: UnitIntervalMap
    roof: Roof

    def total_measure(self) -> float:
        bp = self.roof.breakpoints
        return math.fsum(
            (bp[j + 1] - bp[j]) * v for j, v in enumerate(self.roof.values)
        )

    def point(self, base_pos: float, height: float) -> FlowPoint:
        """Validated phase-space point (raises if above or on the roof)."""
        x = FlowPoint(base_pos, height)
        self.check_point(x)
        return x

    def check_point(self, x: FlowPoint) -> None:
        if not 0.0 <= x.base_pos < 1.0:
            raise ValueError(f"base position must lie in [0, 1); got {x.base_pos!r}")
        r = self.roof.value_at(x.base_pos)
        if not 0.0 <= x.height < r:
            raise ValueError(
                f"height {x.height!r} out of range [0, {r!r}) at base {x.base_pos!r}"
            )


def iter_runs(flow: SpecialFlow, a: float, b: float,
              t: float) -> Iterator[tuple[float, float, float, bool]]:
    """Vertical runs tiling a forward trajectory of duration ``t``.

    Yields ``(base_pos, start_height, duration, crossed)`` tuples, where
    ``crossed`` says the run ends on the roof (and the base map fires).
    Internal workhorse: callers wanting objects should use ``advance``.
    """
    apply = flow.base.apply
    value_at = flow.roof.value_at
    remaining = t
    while remaining > 0.0:
        r = value_at(a)
        dt = r - b
        if remaining >= dt:
            yield a, b, dt, True
            remaining -= dt
            a = apply(a)
            b = 0.0
        else:
            nb = b + remaining
            if nb >= r:
                # last-ulp rounding pushed the endpoint onto the roof:
                # treat the run as a full crossing
                yield a, b, dt, True
                a = apply(a)
                b = 0.0
            else:
                yield a, b, remaining, False
                b = nb
            return


def advance(flow: SpecialFlow, x: FlowPoint,
            t: float) -> tuple[FlowPoint, list[TrajectorySegment]]:
    """Flow ``x`` forward for time ``t`` and report the run decomposition.

    The returned segments tile [0, t]; each roof crossing applies the base
    map exactly once.  ``t`` must be finite and nonnegative.
    """
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"advance needs a finite t >= 0; got {t!r}")
    flow.check_point(x)
    segments: list[TrajectorySegment] = []
    a, b = x.base_pos, x.height
    for sa, sb, dur, crossed in iter_runs(flow, a, b, t):
        segments.append(TrajectorySegment(sa, sb, dur))
        if crossed:
            a, b = flow.base.apply(sa), 0.0
        else:
            a, b = sa, sb + dur
    return FlowPoint(a, b), segments


def flow_distance(x: FlowPoint, y: FlowPoint) -> float:
    """Product metric: circle distance between bases plus height gap."""
    return circle_distance(x.base_pos, y.base_pos) + abs(x.height - y.height)


@dataclass(frozen=True)
class TargetSet:
    """Disjoint union of half-open phase-space rectangles.

    Each rectangle is ``(a_lo, a_hi, b_lo, b_hi)`` meaning
    ``[a_lo, a_hi) x [b_lo, b_hi)``.  Fitting under the roof is checked
    against a concrete flow via ``check_within``.
    """

    rectangles: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.rectangles:
            raise ValueError("a target set needs at least one rectangle")
        for a_lo, a_hi, b_lo, b_hi in self.rectangles:
            if not (0.0 <= a_lo < a_hi <= 1.0):
                raise ValueError(f"bad base range [{a_lo}, {a_hi})")
            if not (0.0 <= b_lo < b_hi):
                raise ValueError(f"bad height range [{b_lo}, {b_hi})")
        rects = self.rectangles
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                ai, bi = rects[i], rects[j]
                if (ai[0] < bi[1] and bi[0] < ai[1]
                        and ai[2] < bi[3] and bi[2] < ai[3]):
                    raise ValueError("target rectangles must be pairwise disjoint")
        if self.measure <= 0.0:
            raise ValueError("target set must have positive measure")

    @property
    def measure(self) -> float:
        return math.fsum(
            (a_hi - a_lo) * (b_hi - b_lo)
            for a_lo, a_hi, b_lo, b_hi in self.rectangles
        )

    def contains(self, x: FlowPoint) -> bool:
        a, b = x.base_pos, x.height
        return any(
            a_lo <= a < a_hi and b_lo <= b < b_hi
            for a_lo, a_hi, b_lo, b_hi in self.rectangles
        )

    def column_intervals(self, a: float) -> list[tuple[float, float]]:
        """Height intervals of the set over base position ``a``."""
        return [
            (b_lo, b_hi)
            for a_lo, a_hi, b_lo, b_hi in self.rectangles
            if a_lo <= a < a_hi
        ]

    def check_within(self, flow: SpecialFlow) -> None:
        """Raise unless every rectangle fits under the roof."""
        bp = flow.roof.breakpoints
        for a_lo, a_hi, b_lo, b_hi in self.rectangles:
            for j, v in enumerate(flow.roof.values):
                if bp[j] < a_hi and a_lo < bp[j + 1] and b_hi > v:
                    raise ValueError(
                        f"rectangle [{a_lo}, {a_hi}) x [{b_lo}, {b_hi}) "
                        f"pokes above the roof value {v}"
                    )
