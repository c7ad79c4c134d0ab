"""Dense low-degree polynomial utilities: calculus, real roots, |p| integrals.

Coefficients are ascending (``coeffs[k]`` multiplies ``x**k``) and held in
plain tuples.  Everything here targets the degrees the trajectory machinery
actually produces (observables up to degree 5, their running integrals up
to degree 6), so the algorithms favour robustness over asymptotics.

Root isolation uses the derivative recursion: critical points split the
interval into monotone pieces, each holding at most one sign-change root,
which bisection then refines.  Points where the polynomial merely touches
zero (even multiplicity) are detected at the critical points themselves.
"""

from __future__ import annotations

from collections.abc import Sequence

Coeffs = Sequence[float]

#: location tolerance for isolated roots
ROOT_TOL = 1e-12


def evaluate(coeffs: Coeffs, x: float) -> float:
    """Horner evaluation of p(x)."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def derivative(coeffs: Coeffs) -> tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


def antiderivative(coeffs: Coeffs) -> tuple[float, ...]:
    """Antiderivative with zero constant term."""
    return (0.0,) + tuple(c / (k + 1) for k, c in enumerate(coeffs))


def shift(coeffs: Coeffs, c: float) -> tuple[float, ...]:
    """Coefficients of u -> p(c + u)."""
    out = [0.0] * len(coeffs)
    for a in reversed(coeffs):
        # out(u) := out(u) * (u + c) + a
        prev = 0.0
        for i in range(len(out)):
            out[i], prev = out[i] * c + prev + (a if i == 0 else 0.0), out[i]
    return tuple(out)


def trim(coeffs: Coeffs) -> tuple[float, ...]:
    """Drop trailing exact-zero coefficients (degree normalisation)."""
    cs = list(coeffs)
    while len(cs) > 1 and cs[-1] == 0.0:
        cs.pop()
    return tuple(cs)


def coefficient_scale(coeffs: Coeffs, lo: float, hi: float) -> float:
    """Crude magnitude bound sum |c_k| * M**k with M = max(|lo|, |hi|, 1)."""
    m = max(abs(lo), abs(hi), 1.0)
    s = 0.0
    p = 1.0
    for c in coeffs:
        s += abs(c) * p
        p *= m
    return max(s, 1.0)


def bisect_root(coeffs: Coeffs, lo: float, hi: float, flo: float, fhi: float,
                tol: float = 0.0) -> float:
    """Bisect a bracketed sign change down to ``tol`` (or machine width)."""
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    pos = flo > 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol:
            break
        fm = evaluate(coeffs, mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == pos:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_roots(coeffs: Coeffs, lo: float, hi: float,
               tol: float = ROOT_TOL) -> list[float]:
    """All real roots of p on [lo, hi], ascending, deduplicated to ``tol``.

    Sign-change roots are located by bisection between critical points;
    touch roots are reported when |p| at a critical point (or interval
    endpoint) falls below a scale-relative threshold.  The zero polynomial
    yields no roots; callers must treat it separately.
    """
    if hi < lo:
        return []
    cs = trim(coeffs)
    deg = len(cs) - 1
    if deg == 0:
        return []
    touch_tol = 1e-13 * coefficient_scale(cs, lo, hi)
    if deg == 1:
        r = -cs[0] / cs[1]
        if lo - tol <= r <= hi + tol:
            return [min(max(r, lo), hi)]
        return []

    crits = real_roots(derivative(cs), lo, hi, tol)
    knots = [lo]
    for c in crits:
        if knots[-1] + tol < c < hi - tol:
            knots.append(c)
    knots.append(hi)

    vals = [evaluate(cs, u) for u in knots]
    roots: list[float] = []

    def push(r: float) -> None:
        if not roots or r - roots[-1] > tol:
            roots.append(r)

    for i, (u, v) in enumerate(zip(knots, vals)):
        if abs(v) <= touch_tol:
            push(u)
        elif i > 0 and abs(vals[i - 1]) > touch_tol and (v > 0.0) != (vals[i - 1] > 0.0):
            push(bisect_root(cs, knots[i - 1], u, vals[i - 1], v, tol))
    return roots


def sup_abs(coeffs: Coeffs, lo: float, hi: float) -> float:
    """max |p| over [lo, hi] (exact: checked at endpoints and critical points)."""
    cs = trim(coeffs)
    best = max(abs(evaluate(cs, lo)), abs(evaluate(cs, hi)))
    if len(cs) > 2:
        for c in real_roots(derivative(cs), lo, hi):
            best = max(best, abs(evaluate(cs, c)))
    return best


def integrate_abs(coeffs: Coeffs, lo: float, hi: float) -> float:
    """Integral of |p| over [lo, hi] via splitting at the roots of p."""
    if hi <= lo:
        return 0.0
    cs = trim(coeffs)
    anti = antiderivative(cs)
    if len(cs) == 1:
        return abs(cs[0]) * (hi - lo)
    cuts = [lo]
    for r in real_roots(cs, lo, hi):
        if cuts[-1] < r < hi:
            cuts.append(r)
    cuts.append(hi)
    total = 0.0
    prev = evaluate(anti, cuts[0])
    for u in cuts[1:]:
        cur = evaluate(anti, u)
        total += abs(cur - prev)
        prev = cur
    return total
