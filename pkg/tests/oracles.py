"""Independent oracle implementations the library is checked against.

Everything here re-derives its answer by a different route from the code
under test: brute-force step loops for orbits and sums, adaptive Simpson
quadrature for trajectory integrals, dense-grid sign scans for integral
zeros, and grid rasterisation for image measures.  Where the library uses
closed forms, the oracles use sampling; where both must iterate the same
pinned stepping rule (one fused frac per rotation step), the oracle code
is written separately from the library's.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ergolab import FlowPoint, IntervalExchange, Rotation

# ---------------------------------------------------------------------------
# orbit and Birkhoff-sum oracles


def step_rotation(a: float, alpha: float) -> float:
    a = a + alpha
    return a - 1.0 if a >= 1.0 else a


def first_return_oracle(alpha: float, intervals, a: float, max_steps: int):
    """Brute-force first return of a rotation orbit to a union of intervals."""
    pos = a
    for n in range(1, max_steps + 1):
        pos = step_rotation(pos, alpha)
        if any(lo <= pos < hi for lo, hi in intervals):
            return n, pos
    return None


def birkhoff_sums_python(m, cells, x: float, n_steps: int) -> list:
    """Plain-Python running sums; ``cells`` is [(lo, hi, value)]."""
    if isinstance(m, Rotation):
        def step(a):
            return step_rotation(a, m.alpha)
    else:
        assert isinstance(m, IntervalExchange)
        edges, offs = m.domain_edges, m.offsets

        def step(a):
            j = 0
            while edges[j + 1] <= a:
                j += 1
            r = a + offs[j]
            if r >= 1.0:
                r = np.nextafter(1.0, 0.0)
            return max(r, 0.0)

    def value(a):
        for lo, hi, v in cells:
            if lo <= a < hi:
                return v
        raise AssertionError(f"no cell contains {a}")

    out = []
    s = 0
    pos = x
    for _ in range(n_steps):
        s += value(pos)
        out.append(s)
        pos = step(pos)
    return out


@njit(cache=True)
def rot_sums_oracle(x, alpha, edges, vals, out):
    """Re-iterated integer sums for a rotation: linear cell scan, own loop."""
    s = 0
    for i in range(out.shape[0]):
        j = 0
        while j + 2 < edges.shape[0] and edges[j + 1] <= x:
            j += 1
        s = s + vals[j]
        out[i] = s
        x = x + alpha
        if x >= 1.0:
            x = x - 1.0
    return x


def rot_zero_times_oracle(x: float, alpha: float, cells, n_steps: int) -> np.ndarray:
    """Exhaustive zero scan of integer sums along a rotation orbit."""
    edges = np.array([lo for lo, _, _ in cells] + [cells[-1][1]], dtype=np.float64)
    vals = np.array([v for _, _, v in cells], dtype=np.int64)
    out = np.empty(n_steps, dtype=np.int64)
    rot_sums_oracle(x, alpha, edges, vals, out)
    return np.nonzero(out == 0)[0].astype(np.int64) + 1


# ---------------------------------------------------------------------------
# trajectory walking and quadrature oracles


def walk_runs(flow, x: FlowPoint, t: float):
    """Own event walker: list of (t_start, base, height, duration)."""
    a, b = x.base_pos, x.height
    runs = []
    elapsed = 0.0
    remaining = t
    while remaining > 0.0:
        r = flow.roof.value_at(a)
        room = r - b
        if remaining >= room:
            runs.append((elapsed, a, b, room))
            elapsed += room
            remaining -= room
            a = flow.base.apply(a)
            b = 0.0
        else:
            runs.append((elapsed, a, b, remaining))
            elapsed += remaining
            remaining = 0.0
    return runs


def poly_eval(coeffs, u: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def observable_value(f, a: float, b: float) -> float:
    j = 0
    bp = f.breakpoints
    while j + 2 < len(bp) and bp[j + 1] <= a:
        j += 1
    return poly_eval(f.coeffs[j], b)


def _adaptive_simpson(g, lo, hi, tol, depth=40):
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = g(lo), g(mid), g(hi)

    def recurse(lo, mid, hi, flo, fmid, fhi, whole, tol, depth):
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm, frm = g(lmid), g(rmid)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (
            recurse(lo, lmid, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)
            + recurse(mid, rmid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1)
        )

    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    return recurse(lo, mid, hi, flo, fmid, fhi, whole, tol, depth)


def phi_quadrature(flow, f, x: FlowPoint, t: float, tol: float = 1e-12) -> float:
    """Adaptive Simpson of the pointwise observable, panel per vertical run."""
    total = 0.0
    for _, a, b0, dur in walk_runs(flow, x, t):
        if dur <= 0.0:
            continue
        total += _adaptive_simpson(
            lambda u, a=a, b0=b0: observable_value(f, a, b0 + u),
            0.0, dur, tol * max(dur, 1e-6),
        )
    return total


def grid_transversal_zeros(flow, f, x: FlowPoint, horizon: float,
                           step: float = 1e-3, zero_tol: float = 1e-9):
    """Dense-grid sign scan with bisection refinement; own integrator.

    Returns the strictly sign-changing zero times.  The grid is aligned
    to the vertical runs, so a panel never straddles a roof crossing and
    refinement only needs the panel's own run.
    """
    runs = walk_runs(flow, x, horizon)
    nodes = [0.0]
    values = [0.0]
    panel_runs = [None]
    acc = 0.0
    for t0, a, b0, dur in runs:
        n_panels = max(1, int(np.ceil(dur / step)))
        h = dur / n_panels
        for i in range(n_panels):
            lo = i * h
            acc += _adaptive_simpson(
                lambda u, a=a, b0=b0: observable_value(f, a, b0 + u),
                lo, lo + h, 1e-14,
            )
            nodes.append(t0 + lo + h)
            values.append(acc)
            panel_runs.append((t0, a, b0))

    zeros = []
    for i in range(1, len(nodes)):
        va, vb = values[i - 1], values[i]
        if abs(va) > zero_tol and abs(vb) > zero_tol and (va > 0) != (vb > 0):
            t0, a, b0 = panel_runs[i]
            t_base = nodes[i - 1]

            def phi_at(t):
                return va + _adaptive_simpson(
                    lambda u: observable_value(f, a, b0 + u),
                    t_base - t0, t - t0, 1e-15,
                )

            lo, hi = t_base, nodes[i]
            flo = va
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = phi_at(mid)
                if abs(fm) <= zero_tol * 0.1 or hi - lo < 1e-13:
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            zeros.append(0.5 * (lo + hi))
    return zeros


# ---------------------------------------------------------------------------
# image-measure rasterisation oracle


def raster_image_measure(poly, d_intervals, n_points: int = 100_000):
    """Rasterised min/max of the indefinite integral plus |f| quadrature."""
    bp = poly.breakpoints

    def feval(s):
        j = 0
        while j + 2 < len(bp) and bp[j + 1] <= s:
            j += 1
        return poly_eval(poly.coeffs[j], s - bp[j])

    images = []
    integral_abs = 0.0
    for lo, hi in d_intervals:
        cuts = sorted({lo, hi, *(b for b in bp if lo < b < hi)})
        fmin = fmax = 0.0
        # F relative to F(lo); rasterise piecewise with Simpson panels
        acc = _f_between(feval, 0.0, lo) if lo > 0.0 else 0.0
        fmin = fmax = acc
        for a, b in zip(cuts, cuts[1:]):
            n = max(8, int(n_points * (b - a) / max(hi - lo, 1e-12)))
            h = (b - a) / n
            for i in range(n):
                s0 = a + i * h
                acc += (h / 6.0) * (
                    feval(s0) + 4.0 * feval(s0 + h / 2.0) + feval(s0 + h)
                )
                fmin = min(fmin, acc)
                fmax = max(fmax, acc)
                integral_abs_panel = (h / 6.0) * (
                    abs(feval(s0)) + 4.0 * abs(feval(s0 + h / 2.0))
                    + abs(feval(s0 + h))
                )
                integral_abs += integral_abs_panel
        images.append((fmin, fmax))
    # merge image intervals
    images.sort()
    total = 0.0
    cur_lo, cur_hi = images[0]
    for lo, hi in images[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    total += cur_hi - cur_lo
    return total, integral_abs, images


def _f_between(feval, lo, hi, n=20_000):
    h = (hi - lo) / n
    acc = 0.0
    for i in range(n):
        s0 = lo + i * h
        acc += (h / 6.0) * (feval(s0) + 4.0 * feval(s0 + h / 2.0) + feval(s0 + h))
    return acc
