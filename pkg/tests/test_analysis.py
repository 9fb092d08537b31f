"""Harness tests: scenarios, sweeps, threshold search, complexity estimates."""

import math

import numpy as np
import pytest

from qnetperc.analysis import (ComplexityParams, Scenario, SweepSpec,
                               coherence_time, complexity_f, find_threshold,
                               interpolate_f, min_d0_for_target, scenario_params,
                               sweep_connectivity, threshold_to_json,
                               worst_case_n, write_aggregate_csv, write_curve_csv)
from qnetperc.quantum import ChannelModel, DistillationParams, ModelParams
from qnetperc.topology import build_network, generate_uniform_points

CP = ComplexityParams(m=102, p=0.722)


def base_params(d0=300.0, eps=0.01, m=102, alpha=0.585):
    return ModelParams(channel=ChannelModel(d0_km=d0, epsilon=eps),
                       distill=DistillationParams(m=m, alpha=alpha))


class TestScenarios:
    def test_no_memory_range(self):
        p = scenario_params(base_params(), Scenario.NO_MEMORY)
        assert p.base_range_km() == pytest.approx(4 / 3 * 0.01 * 300.0, rel=1e-12)
        assert p.component_range_km(100) == p.base_range_km()

    def test_point_to_point_range(self):
        p = scenario_params(base_params(), Scenario.POINT_TO_POINT)
        assert p.base_range_km() == pytest.approx(
            4 / 3 * 0.01 * 102 ** 0.585 * 300.0, rel=1e-12)
        assert p.component_range_km(100) == p.base_range_km()

    def test_distributed_range_grows(self):
        p = scenario_params(base_params(), Scenario.DISTRIBUTED)
        assert p.component_range_km(4) > p.base_range_km()


class TestComplexityTable:
    def test_headline_values(self):
        assert complexity_f(102, CP) == pytest.approx(7.0, rel=0.20)
        assert complexity_f(204, CP) == pytest.approx(1.3e3, rel=0.20)
        assert complexity_f(408, CP) == pytest.approx(1.1e6, rel=0.20)

    def test_monotone_in_n(self):
        values = [complexity_f(n, CP) for n in np.arange(2, 1200, 7)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_decreasing_in_p(self):
        for n in (51, 102, 204, 408, 1000):
            vals = [complexity_f(n, ComplexityParams(m=102, p=p))
                    for p in (0.5, 0.6, 0.722, 0.9)]
            assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_subexponential_growth(self):
        # ln f ~ (ln n)^2 / ln 2 asymptotically; slope within 25% at large n,
        # and ln f / n keeps falling across halving points
        ks = range(1, 28)
        ns = [102 * 2 ** k for k in ks]
        fs = [complexity_f(n, CP) for n in ns]
        per_n = [math.log(f) / n for f, n in zip(fs, ns)]
        assert all(b < a for a, b in zip(per_n, per_n[1:]))
        slope = math.log(fs[-1]) / math.log(ns[-1]) ** 2
        assert abs(slope - 1 / math.log(2)) <= 0.25 / math.log(2)

    def test_eta_reduces_pair_count(self):
        cp9 = ComplexityParams(m=102, p=0.722, eta=0.9)
        # distilling n^eta pairs: same as evaluating the full recursion there
        assert complexity_f(1000, cp9) == complexity_f(1000 ** 0.9, CP)
        assert complexity_f(1000, cp9) < complexity_f(1000, CP)

    def test_domain(self):
        with pytest.raises(ValueError):
            complexity_f(0.5, CP)
        with pytest.raises(ValueError):
            ComplexityParams(m=102, p=1.0)


class TestInterpolation:
    def test_exact_at_halving_points(self):
        for n in (102, 204, 408, 51):
            assert interpolate_f(n, CP) == complexity_f(n, CP)

    def test_geometric_midpoint_between_points(self):
        f = interpolate_f(245, CP)
        expected = math.sqrt(complexity_f(204, CP) * complexity_f(408, CP))
        assert f == pytest.approx(expected, rel=1e-12)
        assert f == pytest.approx(4e4, rel=1.0)  # within a factor of two

    def test_midpoint_of_equal_values_is_that_value(self):
        # the log-space midpoint of two equal values is that value
        f_lo = complexity_f(204, CP)
        assert 10 ** (0.5 * (math.log10(f_lo) + math.log10(f_lo))) == pytest.approx(
            f_lo, rel=1e-12)


class TestWorstCase:
    def test_reference_operating_point(self):
        assert worst_case_n(0.01, 100.0, 300.0, 0.585) == 245

    def test_single_pair_boundary(self):
        # d_worst = (4/3) eps d0 makes the base exactly 1
        assert worst_case_n(0.01, 4 / 3 * 0.01 * 300.0, 300.0, 0.585) == 1

    def test_doubling_distance(self):
        n1 = worst_case_n(0.01, 100.0, 300.0, 0.585)
        n2 = worst_case_n(0.01, 200.0, 300.0, 0.585)
        assert n2 == pytest.approx(n1 * 2 ** (1 / 0.585), abs=1.0)

    def test_alpha_zero_undefined(self):
        with pytest.raises(ValueError):
            worst_case_n(0.01, 100.0, 300.0, 0.0)


class TestCoherence:
    def test_reference_value(self):
        assert coherence_time(4e4, 1e6) == pytest.approx(0.04, rel=1e-12)

    def test_unit_and_zero(self):
        assert coherence_time(123.0, 123.0) == 1.0
        assert coherence_time(0.0, 1e6) == 0.0

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            coherence_time(1.0, 0.0)


class TestSweep:
    def net(self):
        return build_network([("a", "b", 30.0), ("b", "c", 40.0), ("c", "d", 35.0)])

    def test_tiny_d0_gives_singletons(self):
        spec = SweepSpec(d0_grid_km=(1e-6,), seeds=(0,))
        rows, agg = sweep_connectivity(self.net(), base_params(), spec)
        assert all(r.p_inf == 0.25 for r in rows)

    def test_huge_d0_connects_everything(self):
        spec = SweepSpec(d0_grid_km=(1e7,), seeds=(0,))
        rows, _ = sweep_connectivity(self.net(), base_params(), spec)
        assert all(r.p_inf == 1.0 for r in rows)

    def test_scenario_ordering_pointwise(self):
        spec = SweepSpec(d0_grid_km=(50.0, 200.0, 1000.0), seeds=(0, 1))
        rows, agg = sweep_connectivity(self.net(), base_params(), spec)
        by = {(r.scenario, r.d0_km, r.seed): r.p_inf for r in rows}
        for d0 in spec.d0_grid_km:
            for seed in spec.seeds:
                assert (by[("no_memory", d0, seed)]
                        <= by[("point_to_point", d0, seed)]
                        <= by[("distributed", d0, seed)])

    def test_csv_formats(self, tmp_path):
        spec = SweepSpec(d0_grid_km=(100.0,), seeds=(0, 1),
                         scenarios=(Scenario.DISTRIBUTED,))
        rows, agg = sweep_connectivity(self.net(), base_params(), spec)
        curve, aggregate = tmp_path / "c.csv", tmp_path / "a.csv"
        write_curve_csv(rows, curve)
        write_aggregate_csv(agg, aggregate)
        lines = curve.read_text().splitlines()
        assert lines[0] == "scenario,d0_km,seed,p_inf"
        assert len(lines) == 3
        assert aggregate.read_text().splitlines()[0] == "scenario,d0_km,mean,std,n"

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SweepSpec(d0_grid_km=(2.0, 1.0))
        with pytest.raises(ValueError):
            SweepSpec(d0_grid_km=(1.0,), seeds=())

    def test_parallel_jobs_match_serial(self):
        spec = SweepSpec(d0_grid_km=(50.0, 500.0), seeds=(0, 1),
                         scenarios=(Scenario.DISTRIBUTED, Scenario.NO_MEMORY))
        rows1, _ = sweep_connectivity(self.net(), base_params(), spec, jobs=1)
        rows2, _ = sweep_connectivity(self.net(), base_params(), spec, jobs=2)
        assert rows1 == rows2


class TestFindThreshold:
    def factory(self, n=120):
        return lambda seed: generate_uniform_points(n, box_side=1.0, seed=seed)

    def alpha_params(self, alpha):
        return ModelParams(channel=ChannelModel(d0_km=100.0, epsilon=0.001),
                           distill=DistillationParams(m=1, alpha=alpha))

    def test_trivial_target_hits_zero(self):
        est = find_threshold(self.factory(), self.alpha_params(0.0),
                             target=1 / 120, tol=0.01,
                             eps_lo=1e-6, eps_hi=1e-2, seeds=(0, 1))
        assert est.r0_th == 0.0

    def test_non_bracketing_raises(self):
        with pytest.raises(ValueError, match="bracket"):
            find_threshold(self.factory(), self.alpha_params(0.0),
                           target=0.99, tol=0.01,
                           eps_lo=1e-7, eps_hi=2e-7, seeds=(0,))

    def test_self_consistency_across_seed_sets(self):
        params = self.alpha_params(0.0)
        ests = [find_threshold(self.factory(), params, target=0.5, tol=2e-3,
                               eps_lo=1e-4, eps_hi=5e-3,
                               seeds=tuple(range(10 * k, 10 * k + 5)))
                for k in range(3)]
        for a in ests:
            for b in ests:
                assert a.ci_low <= b.r0_th <= a.ci_high or \
                       b.ci_low <= a.r0_th <= b.ci_high

    def test_bracket_invariance(self):
        params = self.alpha_params(0.585)
        kw = dict(target=0.5, tol=2e-3, seeds=(3, 4, 5, 6))
        a = find_threshold(self.factory(), params, eps_lo=1e-4, eps_hi=5e-3, **kw)
        b = find_threshold(self.factory(), params, eps_lo=5e-5, eps_hi=8e-3, **kw)
        assert abs(a.r0_th - b.r0_th) <= (a.ci_high - a.ci_low) + (b.ci_high - b.ci_low) + 4e-3

    def test_json_schema(self):
        est = find_threshold(self.factory(60), self.alpha_params(0.0),
                             target=0.5, tol=5e-3,
                             eps_lo=1e-4, eps_hi=1e-2, seeds=(0, 1, 2))
        doc = threshold_to_json(est)
        assert set(doc) == {"alpha", "r0_th", "ci_low", "ci_high", "replicates"}
        assert doc["replicates"] == 3


class TestMinD0:
    def test_line_network(self):
        net = build_network([("a", "b", 30.0), ("b", "c", 30.0)])
        params = scenario_params(base_params(), Scenario.NO_MEMORY)
        # links need r0 = 0.0133 d0 > 30 km, so d0 just above 2250 km
        res = min_d0_for_target(net, params, target=0.99, d0_lo=100.0,
                                d0_hi=1e5, rel_tol=0.01)
        assert res["d0_km"] == pytest.approx(30.0 / (4 / 3 * 0.01), rel=0.02)

    def test_unreachable_target_raises(self):
        net = build_network([], extra_nodes=["a", "b"])
        with pytest.raises(ValueError, match="unreachable"):
            min_d0_for_target(net, base_params(), target=0.9,
                              d0_lo=1.0, d0_hi=10.0)
