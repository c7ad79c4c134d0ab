"""Cylindrical cascades over base maps: sums, zero times, induced steps.

A cascade pairs a base map ``S`` of [0, 1) with a step function ``g`` and
translates a fiber coordinate by ``g`` at every step.  The interesting
statistics are all about the running sums ``S(x, n) = sum_{i<n} g(S^i x)``:
their exact zeros, the times where they sit on either side of ``n`` times
the mean, the induced sums over first returns to a base set, and the
empirical tail fraction ``|S(x, n)| > eps * n``.

Integer-valued step functions are carried as exact 64-bit integers from
end to end; an orbit whose sums approach the int64 range raises instead
of wrapping.  Long orbits stream through fixed-size blocks of compiled
kernels, but the semantics stay strictly per-step.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .base_systems import BaseSet, IntervalExchange, ReturnStep, Rotation, UnitIntervalMap
from .rng import SplitMix64, substream_seed

_BLOCK = 1 << 20
#: largest N for which a full sums array may be materialised
MAX_MATERIALIZED = 100_000_000

_MEAN_TOL = 1e-12


class FiberOverflowError(OverflowError):
    """An integer fiber left the safe int64 range (no silent wrap)."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on [0, 1) driving a cascade fiber.

    ``values[j]`` holds on ``[breakpoints[j], breakpoints[j+1])``.  When
    the cell endpoints are known exactly as rationals, pass them as
    ``exact_breakpoints``; the mean then has an exact rational value and
    zero-mean preconditions are checked without tolerance.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...] | tuple[int, ...]
    integer_valued: bool
    exact_breakpoints: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("step-function breakpoints must run from 0.0 to 1.0")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise ValueError("step-function breakpoints must be strictly increasing")
        if len(self.values) != len(bp) - 1:
            raise ValueError("step function needs one value per cell")
        if self.integer_valued and not all(
            isinstance(v, int) and not isinstance(v, bool) for v in self.values
        ):
            raise ValueError("integer-valued step function must hold python ints")
        if self.exact_breakpoints is not None:
            if len(self.exact_breakpoints) != len(bp):
                raise ValueError("exact breakpoints must mirror the float ones")
            if any(float(fr) != b for fr, b in zip(self.exact_breakpoints, bp)):
                raise ValueError(
                    "exact breakpoints disagree with their float counterparts"
                )

    @classmethod
    def from_cells(
        cls, cells: list[tuple[float, float, float | int]], integer: bool = False
    ) -> "StepFunction":
        """Build from ``(lo, hi, value)`` cells tiling [0, 1)."""
        cells = sorted(cells)
        bp = [lo for lo, _, _ in cells] + [cells[-1][1]]
        return cls(tuple(bp), tuple(v for _, _, v in cells), integer_valued=integer)

    @classmethod
    def from_rational_cells(
        cls, cells: list[tuple[Fraction, Fraction, float | int]],
        integer: bool = False,
    ) -> "StepFunction":
        """Like ``from_cells`` but with exact rational endpoints."""
        cells = sorted(cells)
        exact = tuple(lo for lo, _, _ in cells) + (cells[-1][1],)
        return cls(
            tuple(float(fr) for fr in exact),
            tuple(v for _, _, v in cells),
            integer_valued=integer,
            exact_breakpoints=exact,
        )

    def value_at(self, a: float) -> float | int:
        return self.values[bisect_right(self.breakpoints, a) - 1]

    def mean(self) -> float:
        bp = self.breakpoints
        return math.fsum(
            (bp[j + 1] - bp[j]) * v for j, v in enumerate(self.values)
        )

    def exact_mean(self) -> Fraction | None:
        """Exact rational mean, when the cell structure supports one."""
        if self.exact_breakpoints is None:
            return None
        if not all(
            isinstance(v, (int, Fraction)) and not isinstance(v, bool)
            for v in self.values
        ):
            return None
        ebp = self.exact_breakpoints
        return sum(
            ((ebp[j + 1] - ebp[j]) * v for j, v in enumerate(self.values)),
            Fraction(0),
        )


@dataclass(frozen=True)
class CascadeState:
    """Base position plus fiber coordinate (exact int or real)."""

    position: float
    fiber: int | float


def cascade_step(m: UnitIntervalMap, g: StepFunction,
                 state: CascadeState) -> CascadeState:
    """One cascade step: move the base, translate the fiber by g."""
    return CascadeState(m.apply(state.position), state.fiber + g.value_at(state.position))


def _g_tables(g: StepFunction) -> tuple[np.ndarray, np.ndarray]:
    edges = np.asarray(g.breakpoints, dtype=np.float64)
    if g.integer_valued:
        return edges, np.asarray(g.values, dtype=np.int64)
    return edges, np.asarray(g.values, dtype=np.float64)


def _iter_sum_blocks(m: UnitIntervalMap, g: StepFunction, x: float, n_steps: int,
                     block: int = _BLOCK) -> Iterator[tuple[int, np.ndarray]]:
    """Stream running sums S(x, n) for n = 1..n_steps in blocks.

    Yields ``(start, sums)`` with ``sums[i] == S(x, start + 1 + i)``.
    Per-step semantics are exact; blocking is a cache/JIT artifact only.
    """
    if n_steps < 1:
        raise ValueError("need at least one step")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"position must lie in [0, 1); got {x!r}")
    edges, vals = _g_tables(g)
    is_rot = isinstance(m, Rotation)
    if not is_rot and not isinstance(m, IntervalExchange):
        raise TypeError(f"unsupported base map {type(m).__name__}")
    if not is_rot:
        dom_edges = np.asarray(m.domain_edges, dtype=np.float64)
        offsets = np.asarray(m.offsets, dtype=np.float64)
    if g.integer_valued:
        s = 0
        done = 0
        while done < n_steps:
            size = min(block, n_steps - done)
            out = np.empty(size, dtype=np.int64)
            if is_rot:
                x, s, overflow = _kernels.rot_sums_int(x, s, m.alpha, edges, vals, out)
            else:
                x, s, overflow = _kernels.iet_sums_int(
                    x, s, dom_edges, offsets, edges, vals, out
                )
            if overflow:
                raise FiberOverflowError(
                    "integer fiber left the safe int64 range; "
                    "rescale the step function or shorten the orbit"
                )
            yield done, out
            done += size
    else:
        s = comp = 0.0
        done = 0
        while done < n_steps:
            size = min(block, n_steps - done)
            out = np.empty(size, dtype=np.float64)
            if is_rot:
                x, s, comp = _kernels.rot_sums_f64(x, s, comp, m.alpha, edges, vals, out)
            else:
                x, s, comp = _kernels.iet_sums_f64(
                    x, s, comp, dom_edges, offsets, edges, vals, out
                )
            yield done, out
            done += size


def birkhoff_sums(m: UnitIntervalMap, g: StepFunction, x: float,
                  n_steps: int) -> np.ndarray:
    """Running sums S(x, n) for n = 1..n_steps (int64 exact, or float64).

    O(n_steps) time and memory; for orbits too long to materialise,
    consume the statistics operations instead.
    """
    if n_steps > MAX_MATERIALIZED:
        raise ValueError(
            f"refusing to materialise {n_steps} sums; cap is {MAX_MATERIALIZED}"
        )
    dtype = np.int64 if g.integer_valued else np.float64
    out = np.empty(n_steps, dtype=dtype)
    for start, blk in _iter_sum_blocks(m, g, x, n_steps):
        out[start:start + blk.shape[0]] = blk
    return out


def check_zero_mean(g: StepFunction) -> None:
    """Raise unless g has exactly (or numerically) zero mean."""
    exact = g.exact_mean()
    if exact is not None:
        if exact != 0:
            raise ValueError(f"step function has nonzero mean {exact}")
    elif abs(g.mean()) > _MEAN_TOL:
        raise ValueError(f"step function has nonzero mean {g.mean()!r}")


def sum_zero_times(m: UnitIntervalMap, g: StepFunction, x: float,
                   n_steps: int) -> np.ndarray:
    """All n <= n_steps with S(x, n) == 0 exactly, ascending.

    Requires an integer-valued, zero-mean step function (the hypotheses
    under which the zero set is infinite for ergodic bases).
    """
    if not g.integer_valued:
        raise ValueError("exact zero times need an integer-valued step function")
    check_zero_mean(g)
    hits: list[np.ndarray] = []
    for start, blk in _iter_sum_blocks(m, g, x, n_steps):
        idx = np.nonzero(blk == 0)[0]
        if idx.size:
            hits.append(idx.astype(np.int64) + (start + 1))
    if not hits:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(hits)


@dataclass(frozen=True, eq=False)
class SignTimes:
    """Times where the sums sit on either side of the linear drift.

    ``below`` collects n with ``S(x, n) - n * mean <= 0`` and ``above``
    the opposite inequality; for exact-rational integer data membership
    is decided in integer arithmetic, otherwise within ``1e-12 * n``.
    ``ratios`` samples ``S(x, n) / n`` at the union of the listed times.
    """

    below: np.ndarray
    above: np.ndarray
    below_ratios: np.ndarray
    above_ratios: np.ndarray
    ratio_times: np.ndarray
    ratios: np.ndarray
    mean_value: float


def shneiberg_sign_times(m: UnitIntervalMap, g: StepFunction, x: float,
                         n_steps: int) -> SignTimes:
    """One-sided deviation times of the running sums up to ``n_steps``."""
    exact = g.exact_mean()
    mean_value = float(exact) if exact is not None else g.mean()
    use_exact = exact is not None and g.integer_valued
    if use_exact:
        p, q = exact.numerator, exact.denominator
    below_n: list[np.ndarray] = []
    above_n: list[np.ndarray] = []
    below_r: list[np.ndarray] = []
    above_r: list[np.ndarray] = []
    for start, blk in _iter_sum_blocks(m, g, x, n_steps):
        n_arr = np.arange(start + 1, start + 1 + blk.shape[0], dtype=np.int64)
        if use_exact:
            if (np.abs(blk).max(initial=0) * abs(q) >= _kernels.OVERFLOW_LIMIT
                    or n_steps * abs(p) >= _kernels.OVERFLOW_LIMIT):
                raise FiberOverflowError("exact deviation test would overflow int64")
            lhs = blk * q - n_arr * p
            below_mask = lhs <= 0
            above_mask = lhs >= 0
        else:
            dev = blk - n_arr * mean_value
            tol = _MEAN_TOL * n_arr
            below_mask = dev <= tol
            above_mask = dev >= -tol
        ratio = blk / n_arr
        below_n.append(n_arr[below_mask])
        above_n.append(n_arr[above_mask])
        below_r.append(ratio[below_mask])
        above_r.append(ratio[above_mask])

    below = np.concatenate(below_n) if below_n else np.empty(0, np.int64)
    above = np.concatenate(above_n) if above_n else np.empty(0, np.int64)
    b_r = np.concatenate(below_r) if below_r else np.empty(0, np.float64)
    a_r = np.concatenate(above_r) if above_r else np.empty(0, np.float64)
    times = np.concatenate((below, above))
    rats = np.concatenate((b_r, a_r))
    order = np.argsort(times, kind="stable")
    times, rats = times[order], rats[order]
    if times.size:
        keep = np.empty(times.shape, dtype=bool)
        keep[0] = True
        keep[1:] = times[1:] != times[:-1]
        times, rats = times[keep], rats[keep]
    return SignTimes(
        below=below, above=above, below_ratios=b_r, above_ratios=a_r,
        ratio_times=times, ratios=rats, mean_value=mean_value,
    )


@dataclass(frozen=True)
class InducedRun:
    """Consecutive first-return steps; ``complete`` is False when the
    per-step horizon ran out and the run is a prefix."""

    steps: tuple[ReturnStep, ...]
    complete: bool

    @property
    def total_return_time(self) -> int:
        return sum(s.return_time for s in self.steps)

    def total_cocycle(self) -> int | float:
        return sum(s.cocycle_sum for s in self.steps)


def induced_cascade_run(m: UnitIntervalMap, g: StepFunction, base: BaseSet,
                        x: float, n_returns: int,
                        max_steps_per_return: int = 10_000_000) -> InducedRun:
    """Run ``n_returns`` steps of the cascade induced on ``base``.

    Each step records the return time n(x), the landing point, and the
    induced value: the sum of g over the excursion including the starting
    point and excluding the landing.  Integer step functions telescope
    exactly: the induced sums equal the full sums at the return times.
    """
    if n_returns < 1:
        raise ValueError("need at least one induced step")
    if not base.contains(x):
        raise ValueError(f"starting point {x!r} lies outside the base set")
    steps: list[ReturnStep] = []
    cur = x
    for _ in range(n_returns):
        acc = g.value_at(cur)
        pos = m.apply(cur)
        n = 1
        while not base.contains(pos):
            if n >= max_steps_per_return:
                return InducedRun(tuple(steps), complete=False)
            acc += g.value_at(pos)
            pos = m.apply(pos)
            n += 1
        steps.append(ReturnStep(return_time=n, landing=pos, cocycle_sum=acc))
        cur = pos
    return InducedRun(tuple(steps), complete=True)


@dataclass(frozen=True)
class WeissTable:
    """Empirical tail fractions of the normalised sums, one per horizon."""

    n_values: tuple[int, ...]
    fractions: tuple[float, ...]
    exceed_counts: tuple[int, ...]
    eps: float
    samples: int
    seed: int


def weiss_statistic(m: UnitIntervalMap, g: StepFunction,
                    n_values: Sequence[int], eps: float, samples: int,
                    seed: int) -> WeissTable:
    """Fraction of seeded uniform starts with |S(x, n)| > eps * n.

    Starts are drawn from per-sample substreams of ``seed``, so the table
    is reproducible independently of scheduling.  A vanishing tail as n
    grows is the checkable hallmark of a recurrent integer cascade even
    without integrability.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if samples < 1:
        raise ValueError("need at least one sample")
    nv = sorted(set(int(n) for n in n_values))
    if not nv or nv[0] < 1:
        raise ValueError("horizons must be positive integers")
    counts = [0] * len(nv)
    for i in range(samples):
        x = SplitMix64(substream_seed(seed, i)).uniform()
        ci = 0
        for start, blk in _iter_sum_blocks(m, g, x, nv[-1]):
            end = start + blk.shape[0]
            while ci < len(nv) and nv[ci] <= end:
                if abs(blk[nv[ci] - 1 - start]) > eps * nv[ci]:
                    counts[ci] += 1
                ci += 1
    return WeissTable(
        n_values=tuple(nv),
        fractions=tuple(c / samples for c in counts),
        exceed_counts=tuple(counts),
        eps=eps,
        samples=samples,
        seed=seed,
    )
