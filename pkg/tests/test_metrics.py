"""Peak-relative growth ratios, classification, and their intervals."""

import math

import numpy as np
import pytest

from conftest import random_model
from nlsig.core import NlsigModel, Partition
from nlsig.fit import TimeSeries, bootstrap, detect_inflections, fit
from nlsig.metrics import (
    DegeneratePartitionError,
    build_report,
    classify,
    metric_ci,
    partition_for,
    states_in_interval,
    xir,
    yir,
)


def one_phase(delta=5.0, lam=6.0):
    p = Partition(x_min=0, x_max=10, delta=delta, y_min=0, y_max=1, lam=lam)
    return NlsigModel((p,))


def separated_model(n, lam=40.0):
    """Phases so steep that each is exactly saturated at the others' peaks."""
    knots = np.linspace(0.0, 100.0 * n, n + 1)
    parts, level = [], 0.0
    for i in range(n):
        lo, hi = knots[i], knots[i + 1]
        parts.append(Partition(x_min=lo, x_max=hi, delta=0.5 * (lo + hi),
                               y_min=level, y_max=level + 1.0, lam=lam))
        level += 1.0
    return NlsigModel(tuple(parts))


class TestYir:
    def test_half_at_peak(self):
        assert yir(one_phase(), 5.0) == pytest.approx(0.5, abs=1e-15)

    def test_half_at_each_peak_when_phases_are_saturated(self):
        for n in (2, 3):
            m = separated_model(n)
            for i, p in enumerate(m.partitions, start=1):
                assert abs(yir(m, p.delta, i) - 0.5) < 1e-12

    def test_zero_in_far_left_tail(self):
        m = one_phase(lam=60.0)
        assert yir(m, -1e4) == 0.0

    def test_hand_value_past_peak(self):
        # alpha = 1.2, so one unit past the peak: 1/(1 + e^-1.2)
        expected = 1.0 / (1.0 + math.exp(-1.2))
        assert yir(one_phase(), 6.0) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.7685, abs=5e-5)

    def test_flat_phase_is_degenerate(self):
        p = Partition(x_min=0, x_max=10, delta=5, y_min=1, y_max=1, lam=6)
        with pytest.raises(DegeneratePartitionError):
            yir(NlsigModel((p,)), 5.0)

    def test_bad_index_rejected(self):
        with pytest.raises(IndexError):
            yir(one_phase(), 5.0, i=2)


class TestXir:
    def test_unity_at_peak(self):
        rng = np.random.default_rng(81)
        for _ in range(10):
            m = random_model(rng, vary_base=True)
            for i, p in enumerate(m.partitions, start=1):
                assert xir(m, p.delta, i) == pytest.approx(1.0, abs=1e-15)

    def test_hand_values_around_peak(self):
        m = one_phase()
        assert xir(m, 6.0) == pytest.approx(math.exp(1.2), rel=1e-14)
        assert xir(m, 4.0) == pytest.approx(math.exp(-1.2), rel=1e-14)

    def test_strictly_increasing_in_x(self):
        m = one_phase()
        xs = np.linspace(-5, 15, 50)
        vals = [xir(m, float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_positive_orientation_regardless_of_sign(self):
        p = Partition(x_min=0, x_max=10, delta=5, y_min=0, y_max=1, lam=6)
        dec = NlsigModel((p,), sign="decreasing")
        assert xir(dec, 4.0) < 1.0 < xir(dec, 6.0)

    def test_saturates_instead_of_overflowing(self):
        m = one_phase(lam=80.0)
        far = xir(m, 1e6)
        assert math.isfinite(far) and far > 1e300
        near_zero = xir(m, -1e6)
        assert near_zero > 0.0


class TestClassify:
    def test_peak_bands(self):
        assert classify(0.50, 1.0) == ("peaking", "peak")
        assert classify(0.4916, 0.9843) == ("peaking", "peak")

    def test_growth_side(self):
        assert classify(0.3622, 0.7549) == ("increasing", "pre_peak")

    def test_decay_side(self):
        assert classify(0.9675, 5.4632) == ("reducing", "post_peak")

    def test_saturated_ratio_is_post_peak(self):
        y_state, x_state = classify(0.99, math.exp(700))
        assert x_state == "post_peak"

    def test_non_finite_ratio_is_indeterminate(self):
        assert classify(0.5, math.inf)[1] == "indeterminate"

    def test_interval_within_band_reads_single_state(self):
        assert states_in_interval((0.49, 0.51), (0.45, 0.55), "yir") == ("peaking",)

    def test_straddling_interval_lists_both_states(self):
        got = states_in_interval((0.9826, 1.0146), (0.9, 1.1), "xir")
        assert got == ("peak",)
        got = states_in_interval((0.8634, 1.0245), (0.9, 1.1), "xir")
        assert got == ("pre_peak", "peak")

    def test_wide_interval_lists_all_states(self):
        got = states_in_interval((0.2, 0.9), (0.45, 0.55), "yir")
        assert got == ("increasing", "peaking", "reducing")


class TestOrderAgreement:
    def test_ratios_agree_on_which_side_of_the_peak(self):
        # within a single increasing phase both ratios sit below their
        # peak thresholds before delta and above them after
        m = one_phase()
        p = m.partitions[0]
        for x in np.linspace(p.x_min, p.delta - 1e-9, 25):
            assert yir(m, float(x)) < 0.5 and xir(m, float(x)) < 1.0
        for x in np.linspace(p.delta + 1e-9, p.x_max, 25):
            assert yir(m, float(x)) > 0.5 and xir(m, float(x)) > 1.0


class TestPartitionSelection:
    def test_picks_phase_containing_x(self):
        m = separated_model(3)
        assert partition_for(m, 150.0) == 2
        assert partition_for(m, 10.0) == 1

    def test_falls_back_to_last_phase(self):
        m = separated_model(2)
        assert partition_for(m, 1e5) == 2
        assert partition_for(m, -1e5) == 2


class TestMetricCi:
    def _fitted(self, noise, seed=17):
        p = Partition(x_min=0, x_max=100, delta=55.0, y_min=0, y_max=1, lam=6)
        m = NlsigModel((p,))
        xs = np.linspace(0, 100, 150)
        rng = np.random.default_rng(seed)
        ts = TimeSeries(x=xs, r=m.value(xs) + rng.normal(0, noise, xs.size))
        return m, ts, fit(ts, detect_inflections(ts))

    def test_zero_residual_interval_collapses(self):
        _, ts, fitted = self._fitted(noise=0.0)
        boot = bootstrap(ts, fitted, B=4, seed=0)
        yir_ci, xir_ci = metric_ci(boot, 60.0, 1)
        assert yir_ci[1] - yir_ci[0] < 1e-9
        assert xir_ci[1] - xir_ci[0] < 1e-9

    def test_bounds_are_order_statistics(self):
        _, ts, fitted = self._fitted(noise=0.01)
        boot = bootstrap(ts, fitted, B=60, seed=1)
        yir_ci, xir_ci = metric_ci(boot, 60.0, 1)
        ys = np.array([yir(m, 60.0, 1) for m in boot.replicates])
        xsr = np.array([xir(m, 60.0, 1) for m in boot.replicates])
        assert yir_ci[0] <= np.median(ys) <= yir_ci[1]
        assert xir_ci[0] <= np.median(xsr) <= xir_ci[1]

    def test_true_ratio_coverage_over_trials(self):
        p = Partition(x_min=0, x_max=100, delta=50.0, y_min=0, y_max=1, lam=6)
        true = NlsigModel((p,))
        xs = np.linspace(0, 100, 120)
        probe = 60.0
        true_yir = yir(true, probe, 1)
        hits = 0
        for trial in range(10):
            rng = np.random.default_rng(300 + trial)
            ts = TimeSeries(x=xs, r=true.value(xs) + rng.normal(0, 0.008, xs.size))
            fitted = fit(ts, detect_inflections(ts))
            boot = bootstrap(ts, fitted, B=100, seed=trial)
            lo, hi = metric_ci(boot, probe, 1)[0]
            hits += lo <= true_yir <= hi
        assert hits >= 8


class TestReport:
    def test_report_states_and_brackets(self):
        p = Partition(x_min=0, x_max=100, delta=55.0, y_min=0, y_max=1, lam=6)
        m = NlsigModel((p,))
        xs = np.linspace(0, 100, 150)
        rng = np.random.default_rng(23)
        ts = TimeSeries(x=xs, r=m.value(xs) + rng.normal(0, 0.005, xs.size))
        fitted = fit(ts, detect_inflections(ts))
        boot = bootstrap(ts, fitted, B=50, seed=7)
        report = build_report(fitted.model, float(xs[-1]), boot)
        assert report.partition_index == 1
        assert report.yir_ci[0] <= report.yir <= report.yir_ci[1]
        assert report.xir_ci[0] <= report.xir <= report.xir_ci[1]
        # series runs well past its peak by the last observation
        assert report.yir_state == "reducing"
        assert report.xir_state == "post_peak"

    def test_point_only_report(self):
        report = build_report(one_phase(), 5.0)
        assert report.yir == pytest.approx(0.5)
        assert report.xir == pytest.approx(1.0)
        assert (report.yir_state, report.xir_state) == ("peaking", "peak")
