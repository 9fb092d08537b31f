"""Property tests: order invariance, monotone coupling, conservation, tie handling."""

import dataclasses
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (disk_percolation_oracle, is_refinement, params_for_r0,
                      random_instance, random_params)
from qnetperc.engine import init_state, run, verify_report
from qnetperc.topology import build_network


def run_variant(network, params, *, policy="lexicographic", seed=None,
                store="auto", reduction="shortcut", prune=True):
    state = init_state(network, params, store=store, reduction=reduction)
    report = run(state, policy=policy, seed=seed, prune=prune)
    verify_report(report)
    return report


class TestOrderInvariance:
    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=30, deadline=None)
    def test_policies_stores_reductions_agree(self, seed):
        network = random_instance(seed, max_n=30)
        params = random_params(seed, network)
        reference = run_variant(network, params).partition_sets()
        variants = [
            dict(policy="random", seed=seed),
            dict(policy="random", seed=seed + 1),
            dict(policy="batch"),
            dict(policy="batch", prune=False),
            dict(store="sparse", reduction="dijkstra"),
            dict(store="sparse", policy="random", seed=seed + 2),
            dict(store="dense", policy="batch") if not _is_edge_list(network)
            else dict(store="dense"),
        ]
        for kwargs in variants:
            assert run_variant(network, params, **kwargs).partition_sets() == reference

    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=20, deadline=None)
    def test_random_orders_share_partition(self, seed):
        network = random_instance(seed + 70_000, max_n=25)
        params = random_params(seed + 70_000, network)
        parts = {frozenset(run_variant(network, params, policy="random",
                                       seed=k).partition_sets())
                 for k in range(6)}
        assert len(parts) == 1


def _is_edge_list(network):
    return hasattr(network, "edges")


class TestMonotoneCoupling:
    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=25, deadline=None)
    def test_larger_ranges_coarsen_partition(self, seed):
        network = random_instance(seed, max_n=30)
        params = random_params(seed, network)
        bigger = dataclasses.replace(
            params, channel=dataclasses.replace(
                params.channel, epsilon=min(0.9, params.channel.epsilon * 1.5)))
        fine = run_variant(network, params).partition_sets()
        coarse = run_variant(network, bigger).partition_sets()
        assert is_refinement(fine, coarse)

    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=25, deadline=None)
    def test_p_inf_monotone_in_epsilon(self, seed):
        network = random_instance(seed + 3, max_n=30)
        params = random_params(seed + 3, network)
        scales = (0.6, 1.0, 1.7)
        values = []
        for s in scales:
            p = dataclasses.replace(params, channel=dataclasses.replace(
                params.channel, epsilon=min(0.9, params.channel.epsilon * s)))
            values.append(run_variant(network, p).p_inf)
        assert values == sorted(values)


class TestScenarioDominance:
    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=20, deadline=None)
    def test_pointwise_ordering(self, seed):
        from qnetperc.analysis import Scenario, scenario_params
        network = random_instance(seed + 9, max_n=30)
        base = random_params(seed + 9, network)
        base = dataclasses.replace(
            base, distill=dataclasses.replace(base.distill, m=16))
        values = {
            sc: run_variant(network, scenario_params(base, sc)).p_inf
            for sc in Scenario
        }
        assert values[Scenario.NO_MEMORY] <= values[Scenario.POINT_TO_POINT]
        assert values[Scenario.POINT_TO_POINT] <= values[Scenario.DISTRIBUTED]


class TestStrictTies:
    def test_exact_tie_never_connects(self):
        net = build_network([("a", "b", 1.0)])
        params = params_for_r0(1.0, 0.585)
        report = run_variant(net, params)
        assert report.partition == (("a",), ("b",))

    def test_tie_perturbation_is_stable(self):
        # shifting an exact-tie distance up by 1e-12 changes nothing
        for bump in (0.0, 1e-12):
            net = build_network([("a", "b", 1.0 + bump), ("b", "c", 0.4)])
            report = run_variant(net, params_for_r0(1.0, 0.585))
            assert report.partition_sets() == {frozenset(("a",)),
                                               frozenset(("b", "c"))}

    def test_classical_limit_on_tie_grid(self):
        # nodes on a unit grid with r0 exactly 1: nothing connects
        edges = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0)]
        report = run_variant(build_network(edges), params_for_r0(1.0, 0.0))
        assert report.p_inf == 0.25


class TestClassicalLimit:
    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=30, deadline=None)
    def test_alpha_zero_equals_disk_graph(self, seed):
        network = random_instance(seed + 31, max_n=30)
        params = random_params(seed + 31, network)
        params = dataclasses.replace(
            params, distill=dataclasses.replace(params.distill, alpha=0.0))
        report = run_variant(network, params)
        assert report.partition_sets() == disk_percolation_oracle(
            network, params.base_range_km())


class TestEventMonotonicity:
    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=20, deadline=None)
    def test_ranges_grow_and_distances_shrink(self, seed):
        from qnetperc.engine import MergeEvent, ReduceEvent
        network = random_instance(seed + 55, max_n=30)
        params = random_params(seed + 55, network)
        report = run_variant(network, params)
        for ev in report.events:
            if isinstance(ev, MergeEvent):
                assert ev.new_range >= max(ev.range_a, ev.range_b) * (1 - 1e-12)
            else:
                assert isinstance(ev, ReduceEvent)

    @given(seed=st.integers(0, 40_000))
    @settings(max_examples=15, deadline=None)
    def test_tracked_pair_distance_never_increases(self, seed):
        # follow one node pair through the run via a probing state copy
        network = random_instance(seed + 91, max_n=20)
        params = random_params(seed + 91, network)
        state = init_state(network, params)
        rng = np.random.default_rng(seed)
        i, j = sorted(rng.choice(state.n_nodes, size=2, replace=False))
        last = math.inf
        guard = 4 * state.n_nodes + 16
        for _ in range(guard):
            if not state.active:
                break
            holders = {}
            for cid, comp in state.comps.items():
                if i in comp.members:
                    holders["i"] = cid
                if j in comp.members:
                    holders["j"] = cid
            if len(holders) == 2 and holders["i"] != holders["j"]:
                d = state.store.distance(holders["i"], holders["j"])
                assert d <= last * (1 + 1e-12)
                last = d
            pairs = state.connectable_pairs()
            if pairs:
                a, b, _ = pairs[0]
                state.merge(a, b)
                continue
            isolated = [a for a in state.active_ids() if state.is_isolated(a)]
            state.reduce_and_remove(isolated[0])
