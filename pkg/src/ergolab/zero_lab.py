"""Integral-zero detection for flows, with and without landing constraints.

The central object is the running trajectory integral of an observable.
Restricted to one vertical run it is an explicit polynomial of degree at
most six in the elapsed time, so its sign-change roots can be isolated
exhaustively (run endpoints plus critical points) and refined by bisection
without any global time grid.  Times where the integral merely dips below
the zero tolerance without changing sign are even-multiplicity suspects:
they are reported, but flagged rather than certified.

On top of the raw zero search sit three refinements:

* zeros filtered through shrinking metric balls around the start
  (an empirical take on metric recurrence of the zeros);
* membership in the short-horizon admissible set, where the trajectory
  averages of |f| and of the target occupancy both stay within
  ``1 +- delta`` up to lag ``b``;
* a pairing search that, given an offset ``d``, finds lags ``s, s'``
  with ``F1(s) - F2(s') = d`` and both probe points admissible,
  demonstrating how an approximate zero is upgraded to an exact one
  landing in the target.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterator

from . import polyroots
from .base_systems import Rotation
from .observables import (
    Observable,
    indicator_observable,
    kahan_add,
    mean,
    mean_center,
    phi_profile,
)
from .special_flow import (
    FlowPoint,
    Roof,
    SpecialFlow,
    TargetSet,
    advance,
    flow_distance,
    iter_runs,
)

__all__ = [
    "AbParams",
    "IdenticallyZeroObservable",
    "PairMatch",
    "PairSearchStats",
    "TargetSet",
    "ZeroEvent",
    "ab_membership",
    "canonical_setup",
    "denisova_returns",
    "find_integral_zeros",
    "joint_pair_search",
]

DEFAULT_ZERO_TOL = 1e-9
_MEAN_WARN = 1e-10


class IdenticallyZeroObservable(ValueError):
    """The observable vanishes everywhere, so every time is a zero."""


@dataclass(frozen=True)
class ZeroEvent:
    """A located time where the trajectory integral vanishes.

    ``kind`` is ``"transversal"`` for certified sign-change roots and
    ``"tangential-suspect"`` where the integral only dips below the
    tolerance without changing sign.
    """

    time: float
    landing: FlowPoint
    in_target: bool
    residual: float
    kind: str


def _landing_point(flow: SpecialFlow, a: float, height: float) -> FlowPoint:
    # heights that reach the roof are identified with the next column base
    if height >= flow.roof.value_at(a):
        return FlowPoint(flow.base.apply(a), 0.0)
    return FlowPoint(a, height)


def find_integral_zeros(flow: SpecialFlow, f: Observable, x: FlowPoint,
                        horizon: float, target: TargetSet | None = None,
                        zero_tol: float = DEFAULT_ZERO_TOL,
                        max_events: int | None = None) -> list[ZeroEvent]:
    """All times t in (0, horizon] where the trajectory integral hits zero.

    Walks the vertical runs once, isolating the roots of the running
    integral per run; with a ``target`` each event also records whether
    the trajectory lands inside it at that moment.  Events come back in
    strictly increasing time order, at most ``max_events`` of them.

    Raises:
        IdenticallyZeroObservable: if ``f`` is the zero observable.
    Warns:
        UserWarning: when |mean(f)| > 1e-10, since the guaranteed-zeros
            setting assumes a centred observable.
    """
    if not math.isfinite(horizon) or horizon <= 0.0:
        raise ValueError(f"horizon must be positive and finite; got {horizon!r}")
    if f.is_identically_zero():
        raise IdenticallyZeroObservable(
            "identically zero observable: every time is an integral zero"
        )
    flow.check_point(x)
    if target is not None:
        target.check_within(flow)
    m = mean(f, flow)
    if abs(m) > _MEAN_WARN:
        warnings.warn(
            f"observable mean {m!r} is not zero; integral zeros are not "
            "guaranteed to recur",
            stacklevel=2,
        )

    events: list[ZeroEvent] = []
    acc = comp = 0.0
    t0 = 0.0
    prev_sign = 0
    # a sub-tolerance dip waiting for the next decisive sign
    pending: tuple[float, FlowPoint, float] | None = None
    last_time = 0.0
    antis = [polyroots.antiderivative(row) for row in f.coeffs]
    done = False

    def emit(time: float, landing: FlowPoint, residual: float, kind: str) -> None:
        nonlocal last_time, done
        if time <= last_time:
            return
        events.append(ZeroEvent(
            time=time,
            landing=landing,
            in_target=(target.contains(landing) if target is not None else True),
            residual=residual,
            kind=kind,
        ))
        last_time = time
        if max_events is not None and len(events) >= max_events:
            done = True

    for a, b0, dur, crossed in iter_runs(flow, x.base_pos, x.height, horizon):
        row = f.coeffs[f.cell_index(a)]
        degree0 = len(row) == 1
        if degree0:
            c = row[0]
            knots = (dur,)
            local = None
        else:
            local = polyroots.shift(row, b0)
            anti_local = polyroots.antiderivative(local)
            crit = [
                u for u in polyroots.real_roots(local, 0.0, dur)
                if 0.0 < u < dur
            ]
            knots = tuple(crit) + (dur,)

        va = acc
        ua = 0.0
        for u in knots:
            if degree0:
                vb = acc + c * u
            else:
                vb = acc + polyroots.evaluate(anti_local, u)
            if abs(vb) <= zero_tol:
                if pending is None:
                    at_roof = crossed and u == dur
                    landing = (
                        _landing_point(flow, a, flow.roof.value_at(a))
                        if at_roof else FlowPoint(a, b0 + u)
                    )
                    pending = (t0 + u, landing, abs(vb))
            else:
                sb = 1 if vb > 0.0 else -1
                if pending is not None:
                    kind = (
                        "transversal"
                        if prev_sign != 0 and sb != prev_sign
                        else "tangential-suspect"
                    )
                    emit(pending[0], pending[1], pending[2], kind)
                    pending = None
                elif abs(va) > zero_tol and (va > 0.0) != (vb > 0.0):
                    if degree0:
                        ur = ua - va / c
                        res = abs(acc + c * ur)
                    else:
                        shifted = (anti_local[0] + acc,) + tuple(anti_local[1:])
                        ur = polyroots.bisect_root(shifted, ua, u, va, vb)
                        res = abs(polyroots.evaluate(shifted, ur))
                    emit(t0 + ur, FlowPoint(a, b0 + ur), res, "transversal")
                prev_sign = sb
            if done:
                return events
            va, ua = vb, u

        inc = c * dur if degree0 else polyroots.evaluate(anti_local, dur)
        acc, comp = kahan_add(acc, comp, inc)
        t0 += dur

    if pending is not None and not done:
        emit(pending[0], pending[1], pending[2], "tangential-suspect")
    return events


def denisova_returns(flow: SpecialFlow, f: Observable, x: FlowPoint,
                     horizon: float, radius_schedule: list[float],
                     zero_tol: float = DEFAULT_ZERO_TOL) -> list[ZeroEvent]:
    """Integral zeros whose landings return to ``x`` through shrinking balls.

    Runs the unconstrained zero search and keeps the first event within
    the current radius, consuming one radius per accepted event.  The
    product metric on the suspension makes this an empirical check of
    metric recurrence of the zeros, not a certification.
    """
    if any(r <= 0.0 for r in radius_schedule):
        raise ValueError("radii must be positive")
    if any(b > a for a, b in zip(radius_schedule, radius_schedule[1:])):
        raise ValueError("radius schedule must be non-increasing")
    if not radius_schedule:
        return []
    accepted: list[ZeroEvent] = []
    idx = 0
    for event in find_integral_zeros(flow, f, x, horizon, target=None,
                                     zero_tol=zero_tol):
        if flow_distance(event.landing, x) <= radius_schedule[idx]:
            accepted.append(event)
            idx += 1
            if idx == len(radius_schedule):
                break
    return accepted


@dataclass(frozen=True)
class AbParams:
    """Short-horizon admissibility parameters.

    ``b`` is the probe lag, ``delta`` the two-sided slack on the
    trajectory averages, ``grid_resolution`` the number of probe times per
    vertical run.  The pairing argument wants ``delta`` (and any offset
    ``d``) well below ``b``; keep both under ``b / 100``.
    """

    b: float
    delta: float
    grid_resolution: int = 64

    def __post_init__(self) -> None:
        if not 0.0 < self.b < math.inf:
            raise ValueError("probe lag b must be positive and finite")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.grid_resolution < 1:
            raise ValueError("grid resolution must be at least 1")


def _abs_prefix_fn(row: tuple[float, ...], b0: float, dur: float):
    """Exact u -> integral of |p(b0 + s)| over [0, u], for u in [0, dur]."""
    if len(row) == 1:
        c = abs(row[0])
        return lambda u: c * u
    anti = polyroots.antiderivative(row)
    lo, hi = b0, b0 + dur
    cuts = [r for r in polyroots.real_roots(row, lo, hi) if lo < r < hi]
    knots = [lo] + cuts + [hi]
    vals = [polyroots.evaluate(anti, k) for k in knots]
    base = [0.0]
    for i in range(1, len(knots)):
        base.append(base[-1] + abs(vals[i] - vals[i - 1]))

    def prefix(u: float) -> float:
        xu = lo + u
        j = min(bisect_right(knots, xu) - 1, len(knots) - 2)
        return base[j] + abs(polyroots.evaluate(anti, xu) - vals[j])

    return prefix


def ab_membership(flow: SpecialFlow, f: Observable, target: TargetSet,
                  x: FlowPoint, params: AbParams) -> bool:
    """Grid check of the short-horizon admissible set around ``target``.

    True when ``x`` lies in the target and, for every probe time t on the
    per-run grid in (0, b], both trajectory averages

        (1/t) * integral of |f|   and   (1/t) * occupancy of the target

    stay strictly inside (1 - delta, 1 + delta).  The per-time integrals
    are exact; only the time grid approximates the continuum, so the test
    is sound but not complete.  Callers are expected to have rescaled f
    so its values near the target sit around 1.
    """
    flow.check_point(x)
    target.check_within(flow)
    if not target.contains(x):
        return False
    lo_bound = 1.0 - params.delta
    hi_bound = 1.0 + params.delta
    res = params.grid_resolution
    abs_prefix = occ_prefix = 0.0
    t0 = 0.0
    for a, b0, dur, _ in iter_runs(flow, x.base_pos, x.height, params.b):
        row = f.coeffs[f.cell_index(a)]
        absf = _abs_prefix_fn(row, b0, dur)
        cols = target.column_intervals(a)
        for i in range(1, res + 1):
            u = dur * i / res
            t = t0 + u
            avg_abs = (abs_prefix + absf(u)) / t
            if not lo_bound < avg_abs < hi_bound:
                return False
            occ = occ_prefix
            top = b0 + u
            for c_lo, c_hi in cols:
                ov = min(top, c_hi) - max(b0, c_lo)
                if ov > 0.0:
                    occ += ov
            if not lo_bound < occ / t < hi_bound:
                return False
        abs_prefix += absf(dur)
        top = b0 + dur
        for c_lo, c_hi in cols:
            ov = min(top, c_hi) - max(b0, c_lo)
            if ov > 0.0:
                occ_prefix += ov
        t0 += dur
    return True


@dataclass(frozen=True)
class PairMatch:
    """Lags with matched integrals: F1(s) - F2(s') = d, both admissible."""

    s: float
    s_prime: float
    matched_value: float
    d: float


@dataclass(frozen=True)
class PairSearchStats:
    """What the pairing scan looked at before succeeding or giving up."""

    grid_points: int
    admissible_starts: int
    candidate_roots: int


def _level_crossings(flow: SpecialFlow, f: Observable, start: FlowPoint,
                     horizon: float, level: float) -> Iterator[tuple[float, FlowPoint]]:
    """Times in [0, horizon] where the running integral from ``start``
    equals ``level``, with the landing points, ascending."""
    acc = comp = 0.0
    t0 = 0.0
    last = -1.0
    for a, b0, dur, crossed in iter_runs(flow, start.base_pos, start.height, horizon):
        row = f.coeffs[f.cell_index(a)]
        local = polyroots.shift(row, b0)
        anti_local = polyroots.antiderivative(local)
        poly = (anti_local[0] + acc - level,) + tuple(anti_local[1:])
        for u in polyroots.real_roots(poly, 0.0, dur):
            t = t0 + u
            if t - last <= 1e-12:
                continue
            at_roof = crossed and u == dur
            landing = (
                _landing_point(flow, a, flow.roof.value_at(a))
                if at_roof else FlowPoint(a, b0 + u)
            )
            yield t, landing
            last = t
        acc, comp = kahan_add(acc, comp, polyroots.evaluate(anti_local, dur))
        t0 += dur


def joint_pair_search(flow: SpecialFlow, f: Observable, target: TargetSet,
                      x: FlowPoint, t_prime: float, params: AbParams,
                      d: float, match_tol: float = 1e-9,
                      ) -> tuple[PairMatch | None, PairSearchStats]:
    """Find lags (s, s') with F1(s) - F2(s') = d and both probes admissible.

    Here F1 is the running integral from ``x`` and F2 the one from the
    time-``t_prime`` image of ``x``.  The scan walks s over the per-run
    grid of [0, b] restricted to admissible starts; for each it solves
    F2(s') = F1(s) - d by per-run root isolation and accepts the first s'
    whose probe point is admissible too.

    Returns ``(match, stats)``; ``match`` is None after a full fruitless
    scan (existence is only guaranteed almost everywhere and for small
    offsets, so callers should treat None as data, not as an error).
    """
    if not 0.0 <= d < params.b / 100.0:
        raise ValueError(
            f"offset d={d!r} outside the small-offset regime [0, b/100)"
        )
    if t_prime < 0.0 or not math.isfinite(t_prime):
        raise ValueError("t_prime must be finite and >= 0")
    flow.check_point(x)
    y = advance(flow, x, t_prime)[0]

    s_grid = [0.0]
    t0 = 0.0
    res = params.grid_resolution
    for _, _, dur, _ in iter_runs(flow, x.base_pos, x.height, params.b):
        s_grid.extend(t0 + dur * i / res for i in range(1, res + 1))
        t0 += dur
    f1_values = phi_profile(flow, f, x, s_grid)

    admissible = 0
    candidates = 0
    for s, f1 in zip(s_grid, f1_values):
        probe = advance(flow, x, s)[0]
        if not ab_membership(flow, f, target, probe, params):
            continue
        admissible += 1
        level = f1 - d
        for s_p, landing in _level_crossings(flow, f, y, params.b, level):
            candidates += 1
            if ab_membership(flow, f, target, landing, params):
                return (
                    PairMatch(s=s, s_prime=s_p, matched_value=f1, d=d),
                    PairSearchStats(len(s_grid), admissible, candidates),
                )
    return None, PairSearchStats(len(s_grid), admissible, candidates)


def canonical_setup() -> tuple[SpecialFlow, Observable, TargetSet]:
    """Reproducible default configuration for the constrained-zero runs.

    Golden rotation base under a two-value roof with incommensurate
    heights (1 and the golden ratio), a mean-centred full-column
    indicator observable, and the upper-level target where the observable
    is at least half its maximum.  The incommensurate roof avoids the
    degenerate circle-flow case where the running integral is periodic.
    """
    alpha = (math.sqrt(5.0) - 1.0) / 2.0
    golden = (math.sqrt(5.0) + 1.0) / 2.0
    flow = SpecialFlow(Rotation(alpha), Roof((0.0, 0.5, 1.0), (1.0, golden)))
    f = mean_center(indicator_observable(flow.roof, 0.0, 0.5), flow)
    target = TargetSet(((0.0, 0.5, 0.0, 1.0),))
    return flow, f, target
