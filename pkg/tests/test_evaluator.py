"""Network function: per-element terms, additivity, divergence properties."""

import numpy as np
import pytest

from divnet import (Edge, Node, NodeKind, WeightedPoints, bregman_div,
                    bregman_net, build_network, compose, empty_network,
                    get_generator, jensen_net, phi, phi_breakdown,
                    sym_bregman_div, sym_bregman_net)

from util import rel


def test_empty_network_is_zero():
    spec = get_generator("quadratic", 1)
    assert phi(empty_network("quadratic"), spec) == 0.0


def test_two_point_arrow_quadratic():
    spec = get_generator("quadratic", 2)
    net = bregman_net(spec, (1.0, 2.0), (0.0, 0.0), 1.0)
    assert rel(phi(net, spec), 2.5) < 1e-12


def test_two_point_arrow_negative_entropy():
    # equals sum p ln(p/q) for mass-balanced vectors; frozen from that sum
    spec = get_generator("negative_entropy", 2)
    net = bregman_net(spec, (0.5, 0.5), (0.25, 0.75), 1.0)
    assert rel(phi(net, spec), 0.14384103622589042) < 1e-10


def test_centroid_fan_one_dim():
    spec = get_generator("quadratic", 1)
    wp = WeightedPoints(((0.0,), (2.0,)), (0.5, 0.5))
    assert rel(phi(jensen_net(spec, wp), spec), 0.5) < 1e-12


class TestBreakdown:
    def test_terms_of_two_point_arrow(self):
        spec = get_generator("quadratic", 2)
        net = bregman_net(spec, (1.0, 2.0), (0.0, 0.0), 1.0)
        bd = phi_breakdown(net, spec)
        assert rel(bd.node_terms["p"], 2.5) < 1e-12   # out-weight * F(P)
        assert bd.node_terms["q"] == 0.0              # F*(0) = 0
        assert bd.edge_terms["e"] == 0.0              # grad F(Q) = 0
        assert bd.total == phi(net, spec)
        assert bd.out_weights["p"] == 1.0 and bd.in_weights["q"] == 1.0

    def test_all_off_is_zero(self):
        net = build_network(
            [Node("p", coord=(1.0,), state="off"),
             Node("q", coord=(2.0,), state="off")],
            [Edge("e", "p", "q", 3.0, state="off"),
             Edge("l", "p", "q", 1.0, state="off", directed=False)],
            "quadratic")
        bd = phi_breakdown(net, get_generator("quadratic", 1))
        assert bd.total == 0.0
        assert all(v == 0.0 for v in bd.node_terms.values())
        assert all(v == 0.0 for v in bd.edge_terms.values())

    def test_isolated_on_node_is_zero_without_evaluation(self):
        # isolated nodes contribute nothing, even at out-of-domain coordinates
        net = build_network([Node("p", coord=(-5.0,))], [], "negative_entropy")
        bd = phi_breakdown(net, get_generator("negative_entropy", 1))
        assert bd.total == 0.0

    def test_total_equals_sum_of_terms(self):
        spec = get_generator("negative_entropy", 2)
        net = sym_bregman_net(spec, (0.5, 0.5), (0.25, 0.75), 1.7)
        bd = phi_breakdown(net, spec)
        assert bd.total == sum(bd.node_terms.values()) + sum(bd.edge_terms.values())

    def test_off_edge_weights_enter_node_sums(self):
        spec = get_generator("quadratic", 1)
        net = build_network(
            [Node("p", coord=(2.0,)), Node("q", coord=(3.0,))],
            [Edge("e", "p", "q", 1.0, state="off")], "quadratic")
        bd = phi_breakdown(net, spec)
        assert bd.out_weights["p"] == 1.0
        assert bd.edge_terms["e"] == 0.0
        # node term uses the OFF weight: out * F(P) = 1 * 2
        assert rel(bd.node_terms["p"], 2.0) < 1e-12


class TestProperties:
    def test_additivity_randomized(self):
        spec = get_generator("quadratic", 2)
        rng = np.random.default_rng(7)
        for k in range(300):
            shared = Node("s", coord=tuple(rng.uniform(-3, 3, 2)))
            n1 = build_network(
                [Node("a", coord=tuple(rng.uniform(-3, 3, 2))), shared],
                [Edge("e1", "a", "s", float(rng.normal()))], "quadratic")
            n2 = build_network(
                [Node("b", coord=tuple(rng.uniform(-3, 3, 2))), shared],
                [Edge("e2", "s", "b", float(rng.normal())),
                 Edge("e3", "b", "b", float(rng.normal()))], "quadratic")
            whole = compose(n1, n2)
            lhs = phi(whole, spec)
            rhs = phi(n1, spec) + phi(n2, spec)
            assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(lhs))

    @pytest.mark.parametrize("name", ["quadratic", "negative_entropy",
                                      "negative_log"])
    def test_two_point_positivity_and_sign(self, name):
        spec = get_generator(name, 2)
        rng = np.random.default_rng(13)
        for _ in range(300):
            p = spec.domain.sample(rng, 2)
            q = spec.domain.sample(rng, 2)
            if np.max(np.abs(p - q)) < 1e-9:
                continue
            assert phi(bregman_net(spec, p, q, 1.0), spec) > 0.0
            assert phi(bregman_net(spec, p, q, -1.0), spec) < 0.0
            assert abs(phi(bregman_net(spec, p, p, 1.0), spec)) <= 1e-12

    def test_coincident_composition_vanishes(self):
        spec = get_generator("negative_entropy", 2)
        p = (0.4, 0.6)
        n1 = bregman_net(spec, p, p, 1.5, p_id="a", q_id="b", edge_id="e1")
        n2 = bregman_net(spec, p, p, 0.5, p_id="b", q_id="a", edge_id="e2")
        assert abs(phi(compose(n1, n2), spec)) <= 1e-12

    def test_monotone_under_added_two_point_term(self):
        spec = get_generator("negative_log", 2)
        rng = np.random.default_rng(19)
        for _ in range(300):
            p = spec.domain.sample(rng, 2)
            q = spec.domain.sample(rng, 2)
            base = bregman_net(spec, p, q, float(rng.uniform(0.1, 2.0)),
                               p_id="a", q_id="b", edge_id="e1")
            extra_w = float(rng.uniform(0.1, 2.0))
            r = spec.domain.sample(rng, 2)
            add = bregman_net(spec, r, p, extra_w, p_id="c", q_id="a",
                              edge_id="e2")
            grown = compose(base, add)
            assert phi(grown, spec) >= phi(base, spec) - 1e-12
            neg = bregman_net(spec, r, p, -extra_w, p_id="c", q_id="a",
                              edge_id="e2")
            assert phi(compose(base, neg), spec) <= phi(base, spec) + 1e-12

    def test_line_consistency(self):
        rng = np.random.default_rng(29)
        for name in ["quadratic", "negative_entropy", "negative_log"]:
            spec = get_generator(name, 2)
            for _ in range(100):
                p = spec.domain.sample(rng, 2)
                q = spec.domain.sample(rng, 2)
                alpha = float(rng.uniform(0.1, 2.0))
                got = phi(sym_bregman_net(spec, p, q, alpha), spec)
                want = alpha * (bregman_div(spec, p, q) + bregman_div(spec, q, p))
                assert rel(got, want) < 1e-9

    def test_breakdown_reproducible(self):
        spec = get_generator("negative_entropy", 2)
        net = sym_bregman_net(spec, (0.5, 0.5), (0.25, 0.75), 1.7)
        a = phi_breakdown(net, spec)
        b = phi_breakdown(net, spec)
        assert a.total == b.total and a.node_terms == b.node_terms
