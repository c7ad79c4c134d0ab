"""Seeded random generators shared by property tests and acceptance runs."""

from __future__ import annotations

from ergolab import (
    FlowPoint,
    IntervalExchange,
    Observable,
    Roof,
    Rotation,
    SpecialFlow,
    mean_center,
    piecewise_observable,
)
from ergolab.rng import SplitMix64

GOLDEN_ROTATION = (5.0**0.5 - 1.0) / 2.0
GOLDEN_RATIO = (5.0**0.5 + 1.0) / 2.0


def random_map(rng: SplitMix64):
    if rng.uniform() < 0.7:
        return Rotation(rng.uniform_in(0.05, 0.95))
    k = rng.randint(2, 4)
    lengths = tuple(rng.uniform_in(0.2, 1.0) for _ in range(k))
    perm = list(range(1, k + 1))
    # seeded Fisher-Yates
    for i in range(k - 1, 0, -1):
        j = rng.randint(0, i)
        perm[i], perm[j] = perm[j], perm[i]
    if perm == list(range(1, k + 1)):
        perm[0], perm[1] = perm[1], perm[0]
    return IntervalExchange(lengths, tuple(perm))


def random_roof(rng: SplitMix64) -> Roof:
    n = rng.randint(1, 3)
    if n == 1:
        return Roof.constant(rng.uniform_in(0.5, 2.0))
    cuts = sorted(rng.uniform_in(0.1, 0.9) for _ in range(n - 1))
    bp = (0.0, *cuts, 1.0)
    return Roof(bp, tuple(rng.uniform_in(0.5, 2.0) for _ in range(n)))


def random_flow(rng: SplitMix64) -> SpecialFlow:
    return SpecialFlow(random_map(rng), random_roof(rng))


def random_observable(rng: SplitMix64, flow: SpecialFlow,
                      max_degree: int = 3, centered: bool = True) -> Observable:
    n = rng.randint(1, 3)
    cuts = sorted(rng.uniform_in(0.1, 0.9) for _ in range(n - 1))
    bp = [0.0, *cuts, 1.0]
    pieces = []
    for j in range(n):
        deg = rng.randint(0, max_degree)
        coeffs = tuple(rng.uniform_in(-1.5, 1.5) for _ in range(deg + 1))
        pieces.append((bp[j], bp[j + 1], coeffs))
    f = piecewise_observable(flow.roof, pieces)
    return mean_center(f, flow) if centered else f


def random_point(rng: SplitMix64, flow: SpecialFlow) -> FlowPoint:
    rmax = flow.roof.max_value
    while True:
        a = rng.uniform()
        b = rng.uniform() * rmax
        if b < flow.roof.value_at(a):
            return FlowPoint(a, b)
