"""Image-measure bound for indefinite integrals, plus the local-limit check.

For an integrable function f on [0, b] with indefinite integral F, the
image of any measurable set D under F has Lebesgue measure at most the
integral of |f| over D.  Restricted to piecewise-polynomial f and finite
interval unions D, both sides are computable in closed form: the image
of an interval under the continuous F is [min F, max F], with extrema
attained at the interval ends, at piece boundaries, or at roots of f,
and the |f| integral splits at those same roots.  A seeded fuzzer
quantifies the inequality over randomized instances and serialises the
worst case it sees.

For finite interval unions the open-cover slack of the general measurable
case is identically zero, so the bound here is checked directly.

The local-limit check lives here too: the trajectory average of a flow
observable over [0, t] converges to the pointwise value as t -> 0, with
an explicit rate bounded by half the height-derivative sup on the probed
run.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass

from . import polyroots
from .observables import Observable, phi
from .rng import SplitMix64, substream_seed
from .special_flow import FlowPoint, SpecialFlow

SLACK_TOL = 1e-9


class LemmaViolation(AssertionError):
    """The image-measure bound failed on a concrete instance.

    This would falsify the implementation, not the bound; the offending
    instance is serialised on the exception for replay.
    """

    def __init__(self, witness: dict) -> None:
        super().__init__(
            f"image-measure bound violated with slack {witness['slack']!r}: "
            f"{witness}"
        )
        self.witness = witness


@dataclass(frozen=True)
class Poly1D:
    """Piecewise polynomial on [0, b]; coefficients are per piece, in the
    local coordinate measured from the piece's left endpoint."""

    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0.0")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.coeffs) != len(bp) - 1:
            raise ValueError("need one coefficient row per piece")
        if any(len(row) == 0 or len(row) > 6 for row in self.coeffs):
            raise ValueError("piece polynomials must have degree 0..5")

    @property
    def domain_length(self) -> float:
        return self.breakpoints[-1]

    def _piece(self, s: float) -> int:
        return min(
            bisect_right(self.breakpoints, s) - 1, len(self.coeffs) - 1
        )

    def eval(self, s: float) -> float:
        j = self._piece(s)
        return polyroots.evaluate(self.coeffs[j], s - self.breakpoints[j])

    def integral_prefixes(self) -> tuple[float, ...]:
        """F at each breakpoint, F being the integral from 0."""
        vals = [0.0]
        for j, row in enumerate(self.coeffs):
            anti = polyroots.antiderivative(row)
            ln = self.breakpoints[j + 1] - self.breakpoints[j]
            vals.append(vals[-1] + polyroots.evaluate(anti, ln))
        return tuple(vals)

    def integral(self, s: float, prefixes: tuple[float, ...] | None = None) -> float:
        """F(s) = integral of the function over [0, s]."""
        if prefixes is None:
            prefixes = self.integral_prefixes()
        j = self._piece(s)
        anti = polyroots.antiderivative(self.coeffs[j])
        return prefixes[j] + polyroots.evaluate(anti, s - self.breakpoints[j])


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted disjoint closed intervals, the measurable sets we quantify over."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        prev = -math.inf
        for lo, hi in self.intervals:
            if hi < lo:
                raise ValueError(f"empty interval [{lo}, {hi}]")
            if lo <= prev:
                raise ValueError("intervals must be sorted and disjoint")
            prev = hi

    @property
    def measure(self) -> float:
        return math.fsum(hi - lo for lo, hi in self.intervals)


@dataclass(frozen=True)
class ImageMeasureResult:
    """Both sides of the image-measure bound, and their gap."""

    image_measure: float
    integral_abs: float
    slack: float
    image_intervals: tuple[tuple[float, float], ...]


def _merged_measure(intervals: list[tuple[float, float]]) -> float:
    if not intervals:
        return 0.0
    intervals = sorted(intervals)
    total = 0.0
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    return total + (cur_hi - cur_lo)


def image_measure(f: Poly1D, d_set: IntervalUnion) -> ImageMeasureResult:
    """Measure of F(D) against the |f| integral over D.

    Per interval of D the image under the continuous F is the range
    [min F, max F], located from F's values at the interval ends, at
    piece boundaries, and at the roots of f; the image measure is the
    measure of the union of these ranges.  The |f| integral splits the
    same way, so constant-sign pieces contribute |F increments| exactly.
    """
    b = f.domain_length
    if d_set.intervals and not (
        0.0 <= d_set.intervals[0][0] and d_set.intervals[-1][1] <= b
    ):
        raise ValueError(f"D must sit inside [0, {b}]")
    prefixes = f.integral_prefixes()
    images: list[tuple[float, float]] = []
    abs_parts: list[float] = []
    for lo, hi in d_set.intervals:
        cuts = {lo, hi}
        j_lo = f._piece(lo)
        j_hi = f._piece(hi)
        for j in range(j_lo, j_hi + 1):
            left = f.breakpoints[j]
            right = f.breakpoints[j + 1]
            if lo < left < hi:
                cuts.add(left)
            a = max(lo, left) - left
            z = min(hi, right) - left
            if z > a or (z == a and lo == hi):
                for r in polyroots.real_roots(f.coeffs[j], a, z):
                    cuts.add(left + r)
        points = sorted(cuts)
        values = [f.integral(s, prefixes) for s in points]
        images.append((min(values), max(values)))
        abs_parts.extend(
            abs(v2 - v1) for v1, v2 in zip(values, values[1:])
        )
    img = _merged_measure(images)
    integral_abs = math.fsum(abs_parts)
    return ImageMeasureResult(
        image_measure=img,
        integral_abs=integral_abs,
        slack=integral_abs - img,
        image_intervals=tuple(images),
    )


def serialize_instance(f: Poly1D, d_set: IntervalUnion, slack: float) -> dict:
    """JSON-ready witness: breakpoints, coefficients, D intervals, slack."""
    return {
        "breakpoints": list(f.breakpoints),
        "coefficients": [list(row) for row in f.coeffs],
        "D_intervals": [list(iv) for iv in d_set.intervals],
        "slack": slack,
    }


@dataclass(frozen=True)
class FuzzReport:
    """Outcome of a randomized image-measure campaign."""

    trials: int
    seed: int
    min_slack: float
    min_witness: dict
    slacks: tuple[float, ...]
    equality_trials: int
    max_equality_abs_slack: float


def _random_instance(rng: SplitMix64, degree_cap: int, piece_cap: int,
                     equality_case: bool) -> tuple[Poly1D, IntervalUnion]:
    b = rng.uniform_in(0.5, 2.0)
    n_pieces = rng.randint(1, piece_cap)
    cuts = sorted(rng.uniform_in(0.05 * b, 0.95 * b) for _ in range(n_pieces - 1))
    bp = [0.0, *cuts, b]
    rows = []
    for j in range(n_pieces):
        deg = rng.randint(0, min(degree_cap, 2) if equality_case else degree_cap)
        row = [rng.uniform_in(-2.0, 2.0) for _ in range(deg + 1)]
        if equality_case:
            # shift the piece to a strictly positive range so F is monotone
            ln = bp[j + 1] - bp[j]
            low = -polyroots.sup_abs(row, 0.0, ln)
            row[0] += 0.05 - low
        rows.append(tuple(row))
    f = Poly1D(tuple(bp), tuple(rows))
    if equality_case:
        lo = rng.uniform_in(0.0, 0.4 * b)
        hi = rng.uniform_in(0.6 * b, b)
        d_set = IntervalUnion(((lo, hi),))
    else:
        n_iv = rng.randint(1, 3)
        pts = sorted(rng.uniform_in(0.0, b) for _ in range(2 * n_iv))
        ivs = [
            (pts[2 * i], pts[2 * i + 1])
            for i in range(n_iv)
            if pts[2 * i + 1] > pts[2 * i]
        ]
        if not ivs:
            ivs = [(0.0, b)]
        d_set = IntervalUnion(tuple(ivs))
    return f, d_set


def lemma_fuzz(seed: int, trials: int, degree_cap: int = 5,
               piece_cap: int = 4) -> FuzzReport:
    """Randomized check of the image-measure bound.

    Instances are generated on per-trial substreams of ``seed``; every
    fifth trial is a constant-sign, single-interval equality case where
    the two sides must agree to machine precision.  A trial with slack
    below ``-SLACK_TOL`` raises ``LemmaViolation`` carrying the instance.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    slacks: list[float] = []
    min_slack = math.inf
    min_witness: dict = {}
    equality_trials = 0
    max_eq_abs = 0.0
    for t in range(trials):
        rng = SplitMix64(substream_seed(seed, t))
        equality_case = t % 5 == 4
        f, d_set = _random_instance(rng, degree_cap, piece_cap, equality_case)
        result = image_measure(f, d_set)
        slacks.append(result.slack)
        if result.slack < min_slack:
            min_slack = result.slack
            min_witness = serialize_instance(f, d_set, result.slack)
        if equality_case:
            equality_trials += 1
            max_eq_abs = max(max_eq_abs, abs(result.slack))
        if result.slack < -SLACK_TOL:
            raise LemmaViolation(serialize_instance(f, d_set, result.slack))
    return FuzzReport(
        trials=trials,
        seed=seed,
        min_slack=min_slack,
        min_witness=min_witness,
        slacks=tuple(slacks),
        equality_trials=equality_trials,
        max_equality_abs_slack=max_eq_abs,
    )


def local_wiener_check(flow: SpecialFlow, f: Observable, x: FlowPoint,
                       t_values: list[float]) -> list[float]:
    """Residuals |phi(t)/t - f(x)| of the short-time trajectory average.

    For an observable polynomial in height, the residual at lag t is
    bounded by half the height-derivative sup times t while the probe
    stays on the initial vertical run; ``wiener_slope_bound`` computes
    that constant.  Warns when the probe window crosses the roof or the
    start sits exactly on a cell boundary, where the rate bound does not
    apply.
    """
    if not t_values or any(t <= 0.0 or not math.isfinite(t) for t in t_values):
        raise ValueError("need positive finite probe lags")
    flow.check_point(x)
    if x.base_pos in f.breakpoints:
        warnings.warn(
            "start sits exactly on a cell boundary; the pointwise value is "
            "one-sided there", stacklevel=2,
        )
    if x.height + max(t_values) > flow.roof.value_at(x.base_pos):
        warnings.warn(
            "probe window crosses the roof; the rate bound does not cover "
            "the largest lags", stacklevel=2,
        )
    fx = f.eval(x)
    return [abs(phi(flow, f, x, t).value / t - fx) for t in t_values]


def wiener_slope_bound(flow: SpecialFlow, f: Observable, x: FlowPoint,
                       t_max: float) -> float:
    """Sup of |d f / d height| along the first run of length ``t_max``."""
    flow.check_point(x)
    row = f.coeffs[f.cell_index(x.base_pos)]
    if len(row) == 1:
        return 0.0
    top = min(x.height + t_max, flow.roof.value_at(x.base_pos))
    return polyroots.sup_abs(polyroots.derivative(row), x.height, top)
