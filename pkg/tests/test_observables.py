import math
import statistics

import pytest

from ergolab import (
    FlowPoint,
    Roof,
    Rotation,
    SpecialFlow,
    TargetSet,
    advance,
    constant_observable,
    indicator_observable,
    max_abs,
    mean,
    mean_center,
    occupation_time,
    phi,
    phi_profile,
    piecewise_observable,
)
from ergolab.rng import SplitMix64
from helpers import GOLDEN_ROTATION, random_flow, random_observable, random_point
from oracles import phi_quadrature

UNIT_FLOW = SpecialFlow(Rotation(0.25), Roof.constant(1.0))


def pm_halves(roof):
    return piecewise_observable(roof, [(0.0, 0.5, (1.0,)), (0.5, 1.0, (-1.0,))])


class TestEval:
    def test_constant(self):
        f = constant_observable(UNIT_FLOW.roof, 1.0)
        assert f.eval(FlowPoint(0.123, 0.456)) == 1.0

    def test_height_linear(self):
        f = piecewise_observable(UNIT_FLOW.roof, [(0.0, 1.0, (0.0, 1.0))])
        assert f.eval(FlowPoint(0.3, 0.25)) == 0.25

    def test_sign_indicator(self):
        f = pm_halves(UNIT_FLOW.roof)
        assert f.eval(FlowPoint(0.7, 0.1)) == -1.0
        assert f.eval(FlowPoint(0.2, 0.9)) == 1.0


class TestMean:
    def test_height_linear(self):
        f = piecewise_observable(UNIT_FLOW.roof, [(0.0, 1.0, (0.0, 1.0))])
        assert mean(f, UNIT_FLOW) == pytest.approx(0.5)

    def test_two_value_roof_constant(self):
        flow = SpecialFlow(Rotation(0.25), Roof((0.0, 0.5, 1.0), (1.0, 3.0)))
        f = constant_observable(flow.roof, 1.0)
        assert mean(f, flow) == pytest.approx(1.0)

    def test_symmetric_halves(self):
        assert mean(pm_halves(UNIT_FLOW.roof), UNIT_FLOW) == pytest.approx(0.0)


class TestMeanCenter:
    def test_constant_centers_to_zero(self):
        f = mean_center(constant_observable(UNIT_FLOW.roof, 1.0), UNIT_FLOW)
        assert f.is_identically_zero()

    def test_height_linear(self):
        f = mean_center(
            piecewise_observable(UNIT_FLOW.roof, [(0.0, 1.0, (0.0, 1.0))]),
            UNIT_FLOW,
        )
        assert f.coeffs == ((-0.5, 1.0),)

    def test_indicator(self):
        f = mean_center(indicator_observable(UNIT_FLOW.roof, 0.0, 0.3), UNIT_FLOW)
        assert f.eval_at(0.1, 0.5) == pytest.approx(0.7)
        assert f.eval_at(0.9, 0.5) == pytest.approx(-0.3)
        mx = max(abs(c) for row in f.coeffs for c in row)
        assert abs(mean(f, UNIT_FLOW)) <= 1e-14 * mx


class TestPhi:
    def test_constant_integrates_linearly(self):
        f = constant_observable(UNIT_FLOW.roof, 2.5)
        res = phi(UNIT_FLOW, f, FlowPoint(0.1, 0.2), 7.0)
        assert res.value == pytest.approx(2.5 * 7.0, rel=1e-14)

    def test_three_cell_walk(self):
        f = pm_halves(UNIT_FLOW.roof)
        res = phi(UNIT_FLOW, f, FlowPoint(0.0, 0.0), 2.5)
        assert res.value == pytest.approx(1.5)
        assert res.segments_used == 3

    def test_golden_against_quadrature(self):
        flow = SpecialFlow(Rotation(GOLDEN_ROTATION), Roof.constant(1.0))
        f = mean_center(indicator_observable(flow.roof, 0.0, 0.5), flow)
        res = phi(flow, f, FlowPoint(0.1, 0.0), 100.0)
        expected = phi_quadrature(flow, f, FlowPoint(0.1, 0.0), 100.0)
        assert res.value == pytest.approx(expected, abs=1e-8)

    def test_quadrature_agreement_random(self):
        # closed form vs adaptive Simpson on seeded configurations
        rng = SplitMix64(4242)
        for _ in range(25):
            flow = random_flow(rng)
            f = random_observable(rng, flow, max_degree=5)
            x = random_point(rng, flow)
            t = rng.uniform_in(0.5, 30.0)
            got = phi(flow, f, x, t).value
            want = phi_quadrature(flow, f, x, t)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-8)

    def test_abs_value_dominates(self):
        rng = SplitMix64(77)
        for _ in range(200):
            flow = random_flow(rng)
            f = random_observable(rng, flow)
            x = random_point(rng, flow)
            t = rng.uniform_in(0.0, 20.0)
            res = phi(flow, f, x, t, with_abs=True)
            assert res.abs_value >= abs(res.value) - 1e-12 * (1.0 + res.abs_value)

    def test_abs_value_equals_value_for_constant_sign(self):
        f = constant_observable(UNIT_FLOW.roof, 1.5)
        res = phi(UNIT_FLOW, f, FlowPoint(0.3, 0.1), 13.7, with_abs=True)
        assert res.abs_value == res.value

        g = piecewise_observable(
            UNIT_FLOW.roof, [(0.0, 1.0, (0.5, 1.0))]  # positive on [0, 1)
        )
        res = phi(UNIT_FLOW, g, FlowPoint(0.3, 0.1), 13.7, with_abs=True)
        assert res.abs_value == res.value

    def test_abs_value_with_sign_change(self):
        # f(b) = 2b - 1 changes sign at b = 0.5 inside every column
        f = piecewise_observable(UNIT_FLOW.roof, [(0.0, 1.0, (-1.0, 2.0))])
        res = phi(UNIT_FLOW, f, FlowPoint(0.0, 0.0), 1.0, with_abs=True)
        assert res.value == pytest.approx(0.0, abs=1e-15)
        assert res.abs_value == pytest.approx(0.5, abs=1e-14)

    def test_cocycle_identity(self):
        rng = SplitMix64(31337)
        for _ in range(2000):
            flow = random_flow(rng)
            f = random_observable(rng, flow)
            x = random_point(rng, flow)
            t = rng.uniform_in(0.0, 50.0)
            s = rng.uniform_in(0.0, 50.0)
            whole = phi(flow, f, x, t + s).value
            first = phi(flow, f, x, t).value
            mid, _ = advance(flow, x, t)
            second = phi(flow, f, mid, s).value
            bound = 1e-9 * (1.0 + t + s) * max(max_abs(f, flow), 1e-12)
            assert abs(whole - first - second) <= bound

    def test_negative_time_rejected(self):
        f = constant_observable(UNIT_FLOW.roof, 1.0)
        with pytest.raises(ValueError):
            phi(UNIT_FLOW, f, FlowPoint(0.0, 0.0), -1.0)

    def test_partition_mismatch_rejected(self):
        other = Roof((0.0, 0.3, 1.0), (1.0, 1.0))
        f = piecewise_observable(other, [(0.0, 1.0, (1.0,))])
        with pytest.raises(ValueError):
            phi(UNIT_FLOW, f, FlowPoint(0.0, 0.0), 1.0)


class TestPhiProfile:
    def test_matches_pointwise_phi(self):
        flow = SpecialFlow(Rotation(GOLDEN_ROTATION), Roof.constant(1.0))
        f = mean_center(indicator_observable(flow.roof, 0.0, 0.5), flow)
        x = FlowPoint(0.1, 0.0)
        ts = [0.0, 0.5, 1.3, 2.0, 7.9, 15.0]
        profile = phi_profile(flow, f, x, ts)
        for t, v in zip(ts, profile):
            assert v == pytest.approx(phi(flow, f, x, t).value, abs=1e-12)

    def test_unsorted_rejected(self):
        f = constant_observable(UNIT_FLOW.roof, 1.0)
        with pytest.raises(ValueError):
            phi_profile(UNIT_FLOW, f, FlowPoint(0.0, 0.0), [1.0, 0.5])


class TestOccupation:
    def test_full_space(self):
        target = TargetSet(((0.0, 1.0, 0.0, 1.0),))
        assert occupation_time(
            UNIT_FLOW, target, FlowPoint(0.2, 0.3), 5.5
        ) == pytest.approx(5.5)

    def test_lower_half_columns(self):
        target = TargetSet(((0.0, 1.0, 0.0, 0.5),))
        assert occupation_time(
            UNIT_FLOW, target, FlowPoint(0.2, 0.0), 1.0
        ) == pytest.approx(0.5)

    def test_half_base(self):
        target = TargetSet(((0.0, 0.5, 0.0, 1.0),))
        assert occupation_time(
            UNIT_FLOW, target, FlowPoint(0.0, 0.0), 4.0
        ) == pytest.approx(2.0)


def test_birkhoff_trend_golden():
    # for a centred observable the time average shrinks with the horizon
    flow = SpecialFlow(Rotation(GOLDEN_ROTATION), Roof.constant(1.0))
    f = mean_center(indicator_observable(flow.roof, 0.0, 0.5), flow)
    rng = SplitMix64(99)
    points = [random_point(rng, flow) for _ in range(50)]
    medians = []
    for horizon in (1e3, 1e4, 1e5):
        vals = [abs(phi(flow, f, x, horizon).value) / horizon for x in points]
        medians.append(statistics.median(vals))
    assert medians[0] >= medians[1] >= medians[2]


def test_max_abs():
    f = piecewise_observable(UNIT_FLOW.roof, [(0.0, 1.0, (-1.0, 2.0))])
    assert max_abs(f, UNIT_FLOW) == pytest.approx(1.0)
    flow2 = SpecialFlow(Rotation(0.25), Roof.constant(2.0))
    f2 = piecewise_observable(flow2.roof, [(0.0, 1.0, (-1.0, 2.0))])
    assert max_abs(f2, flow2) == pytest.approx(3.0)
