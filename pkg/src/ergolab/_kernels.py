"""JIT kernels for long cascade orbits.

These are the only hot loops in the package: a billion-step orbit has to
iterate one fused ``frac(a + alpha)`` per step (no ``n * alpha`` products),
so the loops are compiled rather than vectorised.  Each kernel fills one
block of running sums and returns the carried state, letting callers
stream arbitrarily long orbits with bounded memory.

The cell lookup and the map step must match the pure-Python
``StepFunction.value_at`` / ``UnitIntervalMap.apply`` bit for bit; tests
cross-check this.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# integer fibers flag an error well before int64 wraps
OVERFLOW_LIMIT = 1 << 62


@njit(cache=True, inline="always")
def _cell(edges, x):
    lo = 0
    hi = edges.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < edges[mid]:
            hi = mid
        else:
            lo = mid
    return lo


@njit(cache=True, inline="always")
def _rot_step(x, alpha):
    x = x + alpha
    if x >= 1.0:
        x -= 1.0
    return x


@njit(cache=True, inline="always")
def _iet_step(x, dom_edges, offsets):
    j = _cell(dom_edges, x)
    x = x + offsets[j]
    if x >= 1.0:
        x = np.nextafter(1.0, 0.0)
    elif x < 0.0:
        x = 0.0
    return x


@njit(cache=True)
def rot_sums_int(x, s, alpha, edges, vals, out):
    overflow = False
    for i in range(out.shape[0]):
        s += vals[_cell(edges, x)]
        if s > OVERFLOW_LIMIT or s < -OVERFLOW_LIMIT:
            overflow = True
        out[i] = s
        x = _rot_step(x, alpha)
    return x, s, overflow


@njit(cache=True)
def rot_sums_f64(x, s, comp, alpha, edges, vals, out):
    for i in range(out.shape[0]):
        y = vals[_cell(edges, x)] - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[i] = s
        x = _rot_step(x, alpha)
    return x, s, comp


@njit(cache=True)
def iet_sums_int(x, s, dom_edges, offsets, edges, vals, out):
    overflow = False
    for i in range(out.shape[0]):
        s += vals[_cell(edges, x)]
        if s > OVERFLOW_LIMIT or s < -OVERFLOW_LIMIT:
            overflow = True
        out[i] = s
        x = _iet_step(x, dom_edges, offsets)
    return x, s, overflow


@njit(cache=True)
def iet_sums_f64(x, s, comp, dom_edges, offsets, edges, vals, out):
    for i in range(out.shape[0]):
        y = vals[_cell(edges, x)] - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[i] = s
        x = _iet_step(x, dom_edges, offsets)
    return x, s, comp
