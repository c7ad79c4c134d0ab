"""Piecewise-polynomial observables and exact trajectory integrals.

An observable ``f(a, b)`` is a polynomial of degree <= 5 in the height
``b`` whose coefficients are constant on each cell of a base partition.
The partition refines the roof partition, so the restriction of ``f`` to
any vertical run lives in one cell, and the running integral along a
trajectory is an explicit polynomial per run.  Integrals are therefore
accumulated from closed-form antiderivative increments, with compensated
summation across runs so that million-segment horizons do not drift.

Integrals of |f| split each run at the real roots of the cell polynomial,
which keeps trajectory averages of |f| exact as well.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from . import polyroots
from .special_flow import FlowPoint, Roof, SpecialFlow, TargetSet, iter_runs

MAX_DEGREE = 5


def kahan_add(acc: float, comp: float, term: float) -> tuple[float, float]:
    """One compensated-summation step; returns the new (sum, compensation)."""
    y = term - comp
    t = acc + y
    return t, (t - acc) - y


@dataclass(frozen=True)
class Observable:
    """Height-polynomial observable over a base partition.

    ``coeffs[j][k]`` multiplies ``b**k`` on the cell
    ``[breakpoints[j], breakpoints[j+1])``.  Build instances through
    ``piecewise_observable`` (or the indicator/constant helpers) so the
    partition is refined against the roof automatically.
    """

    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("observable breakpoints must run from 0.0 to 1.0")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise ValueError("observable breakpoints must be strictly increasing")
        if len(self.coeffs) != len(bp) - 1:
            raise ValueError("observable needs one coefficient row per cell")
        for row in self.coeffs:
            if len(row) == 0 or len(row) > MAX_DEGREE + 1:
                raise ValueError(
                    f"cell polynomials must have degree 0..{MAX_DEGREE}"
                )
            if any(not math.isfinite(c) for c in row):
                raise ValueError("observable coefficients must be finite")

    def cell_index(self, a: float) -> int:
        return bisect_right(self.breakpoints, a) - 1

    def eval_at(self, a: float, b: float) -> float:
        return polyroots.evaluate(self.coeffs[self.cell_index(a)], b)

    def eval(self, x: FlowPoint) -> float:
        """Pointwise value of the observable at a phase-space point."""
        return self.eval_at(x.base_pos, x.height)

    @property
    def degree(self) -> int:
        return max(len(row) for row in self.coeffs) - 1

    def is_identically_zero(self) -> bool:
        return all(c == 0.0 for row in self.coeffs for c in row)


def piecewise_observable(
    roof: Roof,
    pieces: list[tuple[float, float, tuple[float, ...]]],
) -> Observable:
    """Observable from base pieces ``(lo, hi, coeffs)``, refined to the roof.

    The pieces must tile [0, 1); the resulting cell partition is the
    common refinement with the roof partition, so every cell sits under a
    single roof value.
    """
    pieces = sorted(pieces)
    if not pieces or pieces[0][0] != 0.0 or pieces[-1][1] != 1.0:
        raise ValueError("observable pieces must tile [0, 1)")
    for (lo, hi, _), (nlo, _, _) in zip(pieces, pieces[1:]):
        if hi != nlo:
            raise ValueError(f"observable pieces leave a gap at {hi!r}")
    cuts = sorted({lo for lo, _, _ in pieces} | set(roof.breakpoints))
    rows: list[tuple[float, ...]] = []
    piece_idx = 0
    for lo in cuts[:-1]:
        while pieces[piece_idx][1] <= lo:
            piece_idx += 1
        rows.append(tuple(float(c) for c in pieces[piece_idx][2]))
    return Observable(tuple(cuts), tuple(rows))


def constant_observable(roof: Roof, value: float) -> Observable:
    return piecewise_observable(roof, [(0.0, 1.0, (float(value),))])


def indicator_observable(roof: Roof, lo: float, hi: float) -> Observable:
    """Indicator of the full column over the base interval [lo, hi)."""
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"bad indicator interval [{lo}, {hi})")
    pieces = []
    if lo > 0.0:
        pieces.append((0.0, lo, (0.0,)))
    pieces.append((lo, hi, (1.0,)))
    if hi < 1.0:
        pieces.append((hi, 1.0, (0.0,)))
    return piecewise_observable(roof, pieces)


def _check_refines(f: Observable, flow: SpecialFlow) -> None:
    cells = set(f.breakpoints)
    if any(b not in cells for b in flow.roof.breakpoints):
        raise ValueError(
            "observable partition does not refine the roof partition; "
            "build the observable with piecewise_observable(roof, ...)"
        )


def mean(f: Observable, flow: SpecialFlow) -> float:
    """Phase-space average of ``f`` (area-weighted, closed form per cell)."""
    _check_refines(f, flow)
    bp = f.breakpoints
    cell_integrals = []
    for j, row in enumerate(f.coeffs):
        r = flow.roof.value_at(bp[j])
        anti = polyroots.antiderivative(row)
        cell_integrals.append((bp[j + 1] - bp[j]) * polyroots.evaluate(anti, r))
    return math.fsum(cell_integrals) / flow.total_measure()


def mean_center(f: Observable, flow: SpecialFlow) -> Observable:
    """Subtract the phase-space mean from the degree-0 coefficients."""
    m = mean(f, flow)
    return Observable(
        f.breakpoints,
        tuple((row[0] - m,) + row[1:] for row in f.coeffs),
    )


def max_abs(f: Observable, flow: SpecialFlow) -> float:
    """Supremum of |f| over the phase space (exact per-cell extrema)."""
    _check_refines(f, flow)
    return max(
        polyroots.sup_abs(row, 0.0, flow.roof.value_at(f.breakpoints[j]))
        for j, row in enumerate(f.coeffs)
    )


@dataclass(frozen=True)
class PhiResult:
    """Trajectory integral of f, and optionally of |f|, over [0, t]."""

    value: float
    segments_used: int
    abs_value: float | None = None


def phi(flow: SpecialFlow, f: Observable, x: FlowPoint, t: float,
        with_abs: bool = False) -> PhiResult:
    """Integral of ``f`` along the trajectory of ``x`` over [0, t].

    The value is the compensated sum of closed-form antiderivative
    increments over the vertical runs.  With ``with_abs`` the integral of
    |f| is accumulated alongside, splitting each run at the real roots of
    its cell polynomial.
    """
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"phi needs a finite t >= 0; got {t!r}")
    flow.check_point(x)
    _check_refines(f, flow)
    antis = [polyroots.antiderivative(row) for row in f.coeffs]
    acc = comp = 0.0
    aacc = acomp = 0.0
    segments = 0
    cell_index = f.cell_index
    coeffs = f.coeffs
    for a, b0, dur, _ in iter_runs(flow, x.base_pos, x.height, t):
        j = cell_index(a)
        row = coeffs[j]
        if len(row) == 1:
            inc = row[0] * dur
            ainc = abs(inc) if with_abs else 0.0
        else:
            anti = antis[j]
            inc = polyroots.evaluate(anti, b0 + dur) - polyroots.evaluate(anti, b0)
            ainc = polyroots.integrate_abs(row, b0, b0 + dur) if with_abs else 0.0
        acc, comp = kahan_add(acc, comp, inc)
        if with_abs:
            aacc, acomp = kahan_add(aacc, acomp, ainc)
        segments += 1
    return PhiResult(
        value=acc,
        segments_used=segments,
        abs_value=aacc if with_abs else None,
    )


def phi_profile(flow: SpecialFlow, f: Observable, x: FlowPoint,
                t_values: list[float]) -> list[float]:
    """Trajectory integral evaluated at many times in one pass.

    ``t_values`` must be sorted ascending and nonnegative; the values are
    exact prefix integrals, identical to calling ``phi`` per time.
    """
    if any(t < 0.0 or not math.isfinite(t) for t in t_values):
        raise ValueError("profile times must be finite and >= 0")
    if any(b > a for a, b in zip(t_values[1:], t_values)):
        raise ValueError("profile times must be sorted ascending")
    if not t_values:
        return []
    flow.check_point(x)
    _check_refines(f, flow)
    antis = [polyroots.antiderivative(row) for row in f.coeffs]
    out: list[float] = []
    idx = 0
    while idx < len(t_values) and t_values[idx] == 0.0:
        out.append(0.0)
        idx += 1
    acc = comp = 0.0
    t0 = 0.0
    horizon = t_values[-1]
    for a, b0, dur, _ in iter_runs(flow, x.base_pos, x.height, horizon):
        anti = antis[f.cell_index(a)]
        p0 = polyroots.evaluate(anti, b0)
        while idx < len(t_values) and t_values[idx] <= t0 + dur:
            u = t_values[idx] - t0
            out.append(acc + (polyroots.evaluate(anti, b0 + u) - p0))
            idx += 1
        acc, comp = kahan_add(
            acc, comp, polyroots.evaluate(anti, b0 + dur) - p0
        )
        t0 += dur
    # times equal to the horizon can be left over after the last run ends
    # exactly on a roof crossing
    while idx < len(t_values):
        out.append(acc)
        idx += 1
    return out


def occupation_time(flow: SpecialFlow, target: TargetSet, x: FlowPoint,
                    t: float) -> float:
    """Lebesgue time the trajectory spends inside ``target`` over [0, t]."""
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"occupation_time needs a finite t >= 0; got {t!r}")
    flow.check_point(x)
    target.check_within(flow)
    acc = comp = 0.0
    for a, b0, dur, _ in iter_runs(flow, x.base_pos, x.height, t):
        hi = b0 + dur
        for c_lo, c_hi in target.column_intervals(a):
            overlap = min(hi, c_hi) - max(b0, c_lo)
            if overlap > 0.0:
                acc, comp = kahan_add(acc, comp, overlap)
    return acc
