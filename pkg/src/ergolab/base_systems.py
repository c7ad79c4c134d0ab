"""Invertible piecewise isometries of [0, 1) and first-return machinery.

Two map families are provided: circle rotations and interval exchange
transformations (IETs).  Both preserve Lebesgue measure; irrationality of
the rotation number (hence ergodicity) is the caller's responsibility and
is never certified here.

Conventions that the whole package relies on:

* every interval is left-closed / right-open, so partitions are honest
  set-theoretic partitions even at shared endpoints;
* positions are plain doubles and a rotation step is the single fused
  ``frac(a + alpha)``, never an accumulated ``n * alpha`` product, so a
  long orbit is deterministic and its error stays O(n ulp).

Maps are immutable after construction and all operations are pure, so
instances can be shared freely across parallel workers.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

MAX_IET_INTERVALS = 16


class HorizonExhausted(RuntimeError):
    """An orbit search ran out of its step budget before succeeding."""

    def __init__(self, message: str, steps_taken: int, last_position: float) -> None:
        super().__init__(message)
        self.steps_taken = steps_taken
        self.last_position = last_position


def _check_unit(a: float) -> None:
    if not 0.0 <= a < 1.0:
        raise ValueError(f"position must lie in [0, 1); got {a!r}")


def circle_distance(a: float, b: float) -> float:
    """Distance on the circle R/Z, in [0, 1/2]."""
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class Rotation:
    """Rotation a -> a + alpha (mod 1) with 0 < alpha < 1."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"rotation angle must lie in (0, 1); got {self.alpha!r}")

    def apply(self, a: float) -> float:
        _check_unit(a)
        r = a + self.alpha
        if r >= 1.0:
            r -= 1.0
        return r

    def apply_inverse(self, a: float) -> float:
        _check_unit(a)
        r = a - self.alpha
        if r < 0.0:
            r += 1.0
        return r


@dataclass(frozen=True)
class IntervalExchange:
    """Interval exchange of k <= 16 subintervals.

    ``lengths`` are normalised to sum to 1; ``permutation`` gives, for each
    domain interval (in left-to-right order, 1-based), its rank in the
    image order.  ``permutation == (2, 1)`` with equal lengths is the half
    rotation.
    """

    lengths: tuple[float, ...]
    permutation: tuple[int, ...]
    # derived lookup tables, computed at construction
    domain_edges: tuple[float, ...] = field(init=False, repr=False, compare=False)
    offsets: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _image_edges: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _image_order: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        k = len(self.lengths)
        if k == 0 or k > MAX_IET_INTERVALS:
            raise ValueError(f"need 1..{MAX_IET_INTERVALS} intervals; got {k}")
        if any(L <= 0.0 for L in self.lengths):
            raise ValueError("all interval lengths must be positive")
        if sorted(self.permutation) != list(range(1, k + 1)):
            raise ValueError(f"permutation must be a bijection on 1..{k}")
        total = math.fsum(self.lengths)
        lengths = tuple(L / total for L in self.lengths)
        if abs(math.fsum(lengths) - 1.0) > 1e-12:
            raise ValueError("interval lengths could not be normalised to sum 1")
        object.__setattr__(self, "lengths", lengths)

        edges = [0.0]
        for L in lengths:
            edges.append(edges[-1] + L)
        edges[-1] = 1.0
        # image left endpoint of interval j: total length of intervals
        # ranked before it in the image order
        image_order = sorted(range(k), key=lambda j: self.permutation[j])
        image_lefts = [0.0] * k
        pos = 0.0
        for j in image_order:
            image_lefts[j] = pos
            pos += lengths[j]
        object.__setattr__(self, "domain_edges", tuple(edges))
        object.__setattr__(
            self, "offsets", tuple(image_lefts[j] - edges[j] for j in range(k))
        )
        object.__setattr__(
            self, "_image_edges", tuple(image_lefts[j] for j in image_order)
        )
        object.__setattr__(self, "_image_order", tuple(image_order))

    def apply(self, a: float) -> float:
        _check_unit(a)
        j = bisect_right(self.domain_edges, a) - 1
        r = a + self.offsets[j]
        # the translate of a half-open interval stays inside [0, 1); the
        # clamps only absorb last-ulp rounding of the offset addition
        if r >= 1.0:
            r = math.nextafter(1.0, 0.0)
        elif r < 0.0:
            r = 0.0
        return r

    def apply_inverse(self, a: float) -> float:
        _check_unit(a)
        pos = bisect_right(self._image_edges, a) - 1
        j = self._image_order[pos]
        r = a - self.offsets[j]
        if r >= 1.0:
            r = math.nextafter(1.0, 0.0)
        elif r < 0.0:
            r = 0.0
        return r


UnitIntervalMap = Rotation | IntervalExchange


@dataclass(frozen=True)
class BaseSet:
    """Finite union of disjoint half-open subintervals of [0, 1)."""

    intervals: tuple[tuple[float, float], ...]
    _flat: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.intervals:
            raise ValueError("a base set needs at least one interval")
        prev_end = -1.0
        for u, v in self.intervals:
            if not (0.0 <= u < v <= 1.0):
                raise ValueError(f"bad interval [{u}, {v}) in base set")
            if u < prev_end:
                raise ValueError("base-set intervals must be sorted and disjoint")
            prev_end = v
        if not 0.0 < self.measure <= 1.0:
            raise ValueError("base set must have total length in (0, 1]")
        object.__setattr__(
            self, "_flat", tuple(e for pair in self.intervals for e in pair)
        )

    @property
    def measure(self) -> float:
        return math.fsum(v - u for u, v in self.intervals)

    def contains(self, a: float) -> bool:
        """Exact left-closed / right-open membership."""
        return bisect_right(self._flat, a) % 2 == 1


@dataclass(frozen=True)
class ReturnStep:
    """One step of the first-return map: exit, wander, land back.

    ``cocycle_sum`` carries the summed step-function values along the
    excursion when an observable is attached, otherwise ``None``.
    """

    return_time: int
    landing: float
    cocycle_sum: int | float | None = None


def first_return(m: UnitIntervalMap, base: BaseSet, a: float,
                 max_steps: int) -> ReturnStep:
    """Smallest n >= 1 with m^n(a) back in ``base``, plus the landing point.

    Raises:
        ValueError: if ``a`` is not in ``base`` or ``max_steps < 1``.
        HorizonExhausted: when no return happens within ``max_steps``;
            the exception records how far the orbit got.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if not base.contains(a):
        raise ValueError(f"starting point {a!r} lies outside the base set")
    pos = a
    for n in range(1, max_steps + 1):
        pos = m.apply(pos)
        if base.contains(pos):
            return ReturnStep(return_time=n, landing=pos)
    raise HorizonExhausted(
        f"no return to the base set within {max_steps} steps from {a!r}",
        steps_taken=max_steps,
        last_position=pos,
    )
