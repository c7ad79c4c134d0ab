import math

import pytest

from ergolab import polyroots as pr
from ergolab.rng import SplitMix64


def test_evaluate_horner():
    assert pr.evaluate((1.0, 2.0, 3.0), 2.0) == 1.0 + 4.0 + 12.0
    assert pr.evaluate((5.0,), 100.0) == 5.0


def test_calculus_roundtrip():
    coeffs = (1.0, -2.0, 0.5, 3.0)
    anti = pr.antiderivative(coeffs)
    assert pr.derivative(anti) == pytest.approx(coeffs)
    assert pr.evaluate(anti, 0.0) == 0.0


def test_shift_matches_direct_evaluation():
    rng = SplitMix64(11)
    for _ in range(200):
        deg = rng.randint(0, 5)
        coeffs = tuple(rng.uniform_in(-2, 2) for _ in range(deg + 1))
        c = rng.uniform_in(-1.5, 1.5)
        shifted = pr.shift(coeffs, c)
        for _ in range(5):
            u = rng.uniform_in(-1, 1)
            assert pr.evaluate(shifted, u) == pytest.approx(
                pr.evaluate(coeffs, c + u), abs=1e-12, rel=1e-12
            )


def test_linear_root():
    assert pr.real_roots((-1.0, 2.0), 0.0, 1.0) == pytest.approx([0.5])
    assert pr.real_roots((-3.0, 2.0), 0.0, 1.0) == []


def test_quadratic_roots():
    # (x - 0.25)(x - 0.75) = x^2 - x + 0.1875
    roots = pr.real_roots((0.1875, -1.0, 1.0), 0.0, 1.0)
    assert roots == pytest.approx([0.25, 0.75], abs=1e-12)


def test_touch_root_detected():
    # (x - 0.5)^2 touches zero without a sign change
    roots = pr.real_roots((0.25, -1.0, 1.0), 0.0, 1.0)
    assert roots == pytest.approx([0.5], abs=1e-9)


def test_endpoint_root():
    roots = pr.real_roots((0.0, 1.0), 0.0, 1.0)
    assert roots == pytest.approx([0.0])


def test_random_roots_against_numpy():
    import numpy as np

    rng = SplitMix64(23)
    for _ in range(300):
        deg = rng.randint(1, 5)
        coeffs = tuple(rng.uniform_in(-2, 2) for _ in range(deg + 1))
        if abs(coeffs[-1]) < 1e-3:
            continue
        expected = sorted(
            r.real
            for r in np.roots(list(reversed(coeffs)))
            if abs(r.imag) < 1e-10 and -1e-9 <= r.real <= 1.0 + 1e-9
        )
        # drop near-duplicate numpy roots (double roots are one touch root)
        dedup = []
        for r in expected:
            if not dedup or r - dedup[-1] > 1e-7:
                dedup.append(r)
        got = pr.real_roots(coeffs, 0.0, 1.0)
        assert len(got) == len(dedup), (coeffs, got, dedup)
        for g, e in zip(got, dedup):
            assert g == pytest.approx(e, abs=1e-7)


def test_integrate_abs_sign_change():
    # f = 2x - 1 on [0, 1]: integral of |f| is 0.5
    assert pr.integrate_abs((-1.0, 2.0), 0.0, 1.0) == pytest.approx(0.5, abs=1e-14)
    assert pr.integrate_abs((1.0,), 0.2, 0.5) == pytest.approx(0.3)


def test_integrate_abs_matches_quadrature():
    rng = SplitMix64(37)
    for _ in range(100):
        deg = rng.randint(0, 5)
        coeffs = tuple(rng.uniform_in(-2, 2) for _ in range(deg + 1))
        lo, hi = sorted((rng.uniform_in(0, 2), rng.uniform_in(0, 2)))
        if hi - lo < 1e-6:
            continue
        n = 4000
        h = (hi - lo) / n
        approx = sum(
            (h / 6.0)
            * (
                abs(pr.evaluate(coeffs, lo + i * h))
                + 4.0 * abs(pr.evaluate(coeffs, lo + (i + 0.5) * h))
                + abs(pr.evaluate(coeffs, lo + (i + 1) * h))
            )
            for i in range(n)
        )
        assert pr.integrate_abs(coeffs, lo, hi) == pytest.approx(approx, abs=1e-7)


def test_sup_abs():
    # |2x - 1| on [0, 1] peaks at the endpoints
    assert pr.sup_abs((-1.0, 2.0), 0.0, 1.0) == pytest.approx(1.0)
    # x - x^2 peaks at 0.25 inside
    assert pr.sup_abs((0.0, 1.0, -1.0), 0.0, 1.0) == pytest.approx(0.25)


def test_zero_polynomial_has_no_roots():
    assert pr.real_roots((0.0,), 0.0, 1.0) == []
    assert pr.integrate_abs((0.0,), 0.0, 1.0) == 0.0


def test_bisect_root_refines_to_machine():
    coeffs = (-2.0, 0.0, 1.0)  # root sqrt(2)
    root = pr.bisect_root(coeffs, 1.0, 2.0, -1.0, 2.0)
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-14)
