"""Scripted multi-step deformations replay with a constant network value."""

import numpy as np
import pytest

from divnet import get_generator, phi, sym_bregman_div
from divnet.derivations import (centroid_insertion_roundtrip,
                                connection_contraction,
                                line_connection_deformation,
                                parallelogram_scripts)
from divnet.netmodel import network_from_json
from divnet.rewrite import replay

from util import rel

GENERATORS = ["quadratic", "negative_entropy", "negative_log"]


def sample_pair(spec, rng):
    return spec.domain.sample(rng, spec.dim), spec.domain.sample(rng, spec.dim)


@pytest.mark.parametrize("name", GENERATORS)
def test_centroid_insertion_roundtrip(name):
    spec = get_generator(name, 2)
    rng = np.random.default_rng(41)
    pts = [tuple(spec.domain.sample(rng, 2)) for _ in range(3)]
    weights = [float(w) for w in rng.uniform(0.3, 1.5, 3)]
    q = tuple(spec.domain.sample(rng, 2))
    script = centroid_insertion_roundtrip(spec, pts, weights, q)
    report = replay(script, spec)
    assert report.passed
    assert report.final_equal is True
    assert report.max_residual <= 1e-9
    assert rel(report.phi_initial, report.phi_final) < 1e-9
    rules = [s["rule"] for s in script["steps"]]
    assert rules == ["OnOff1", "OnOff1", "Insertion1", "Insertion1"]
    # endpoint is the OFF-variant insertion target: OFF fan into an OFF
    # centroid bridged to the anchor
    final = network_from_json(script["final"])
    derived = [n for n in final.nodes.values() if n.derived]
    assert len(derived) == 1 and not derived[0].is_on()


@pytest.mark.parametrize("name", GENERATORS)
def test_line_connection_deformation(name):
    spec = get_generator(name, 2)
    rng = np.random.default_rng(43)
    p, q = sample_pair(spec, rng)
    alpha, beta = 1.0, 2.0
    script = line_connection_deformation(spec, p, q, alpha, beta)
    report = replay(script, spec)
    assert report.passed
    assert report.max_residual <= 1e-9
    # initial value is the weighted two-line star through the centroid
    center = (alpha * np.asarray(p) + beta * np.asarray(q)) / (alpha + beta)
    want = (alpha * sym_bregman_div(spec, p, center)
            + beta * sym_bregman_div(spec, q, center))
    assert rel(report.phi_initial, want) < 1e-9


@pytest.mark.parametrize("name", GENERATORS)
def test_connection_contraction_matches_closed_form(name):
    spec = get_generator(name, 2)
    rng = np.random.default_rng(47)
    p, q = sample_pair(spec, rng)
    alpha, beta = 0.7, 1.9
    script = connection_contraction(spec, p, q, alpha, beta)
    report = replay(script, spec)
    assert report.passed and report.final_equal is True
    want = alpha * beta / (alpha + beta) * sym_bregman_div(spec, p, q)
    assert rel(report.phi_final, want) < 1e-9
    # the deformation route reaches the same value as the contraction
    deform = line_connection_deformation(spec, p, q, alpha, beta)
    assert rel(replay(deform, spec).phi_final, want) < 1e-9


@pytest.mark.parametrize("name", GENERATORS)
def test_parallelogram_scripts(name):
    spec = get_generator(name, 2)
    rng = np.random.default_rng(53)
    q = spec.domain.sample(rng, 2)
    s = spec.domain.sample(rng, 2)
    if spec.domain.kind == "positive":
        u = rng.uniform(0.2, 0.8)
        p = u * (q + s)
    else:
        p = spec.domain.sample(rng, 2)
    r = q + s - p
    fan, star = parallelogram_scripts(spec, tuple(p), tuple(q), tuple(r),
                                      tuple(s))
    fan_report = replay(fan, spec)
    star_report = replay(star, spec)
    assert fan_report.passed and fan_report.final_equal is True
    assert star_report.passed and star_report.final_equal is True
    assert fan_report.max_residual <= 1e-9
    assert star_report.max_residual <= 1e-9
    # the law: cycle value equals diagonal value
    assert rel(fan_report.phi_initial, star_report.phi_final) < 1e-9
    # and against the closed form
    want = (sym_bregman_div(spec, p, r) + sym_bregman_div(spec, q, s))
    assert rel(star_report.phi_final, want) < 1e-9


def test_parallelogram_requires_constraint():
    spec = get_generator("quadratic", 2)
    with pytest.raises(ValueError):
        parallelogram_scripts(spec, (0.0, 0.0), (1.0, 0.0), (2.0, 2.0),
                              (0.0, 1.0))


def test_star_contraction_fails_off_constraint():
    # without P+R=Q+S the second contraction has no valid anchor
    from divnet import Edge, Node, build_network
    from divnet.rewrite import RuleId, list_matches
    spec = get_generator("quadratic", 2)
    p, q, r, s = (np.array(x) for x in
                  [(0.0, 0.0), (1.0, 0.0), (2.0, 2.0), (0.0, 1.)])
    center = (p + r) / 2.0
    net = build_network(
        [Node("p", coord=tuple(p)), Node("q", coord=tuple(q)),
         Node("r", coord=tuple(r)), Node("s", coord=tuple(s)),
         Node("o", coord=tuple(center))],
        [Edge("po", "p", "o", 2.0, directed=False),
         Edge("qo", "q", "o", 2.0, directed=False),
         Edge("ro", "r", "o", 2.0, directed=False),
         Edge("so", "s", "o", 2.0, directed=False)],
        "quadratic")
    anchors = {frozenset(m.edges) for m in
               list_matches(net, RuleId.CONNECTION, spec)
               if m.direction == "forward"}
    assert frozenset(("po", "ro")) in anchors
    assert frozenset(("qo", "so")) not in anchors
