"""Command-line surface: output format, exit codes, determinism."""

import json

import pytest

from divnet import bregman_net, get_generator, network_to_json, save_network
from divnet.cli import main
from divnet.derivations import centroid_insertion_roundtrip


@pytest.fixture()
def bregman_file(tmp_path):
    spec = get_generator("quadratic", 2)
    net = bregman_net(spec, (1.0, 2.0), (0.0, 0.0), 1.0)
    path = tmp_path / "bregman.json"
    save_network(net, str(path))
    return str(path)


class TestEval:
    def test_prints_twelve_decimals(self, bregman_file, capsys):
        assert main(["eval", bregman_file, "--convex", "quadratic"]) == 0
        assert capsys.readouterr().out.strip() == "2.500000000000"

    def test_breakdown(self, bregman_file, capsys):
        assert main(["eval", bregman_file, "--breakdown"]) == 0
        out = capsys.readouterr().out
        assert "total 2.500000000000" in out
        assert "node p" in out and "edge e" in out

    def test_missing_file_exit_2(self, capsys):
        assert main(["eval", "missing.json"]) == 2
        assert "not found" in capsys.readouterr().err

    def test_domain_error_exit_2(self, tmp_path, capsys):
        spec = get_generator("quadratic", 1)
        net = bregman_net(spec, (-1.0,), (1.0,), 1.0)
        path = tmp_path / "neg.json"
        save_network(net, str(path))
        assert main(["eval", str(path), "--convex", "negative_entropy"]) == 2

    def test_byte_identical_output(self, bregman_file, capsys):
        main(["eval", bregman_file])
        first = capsys.readouterr().out
        main(["eval", bregman_file])
        assert capsys.readouterr().out == first


class TestBuild:
    def test_bregman_round_trip(self, tmp_path, capsys):
        out = tmp_path / "net.json"
        assert main(["build", "bregman", "--convex", "quadratic",
                     "--p", "1,2", "--q", "0,0", "--alpha", "1.0",
                     "-o", str(out)]) == 0
        assert main(["eval", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "2.500000000000"

    def test_jensen_to_stdout(self, capsys):
        assert main(["build", "jensen", "--convex", "quadratic",
                     "--points", "0;2", "--weights", "0.5,0.5"]) == 0
        data = json.loads(capsys.readouterr().out)
        kinds = {n["kind"] for n in data["nodes"]}
        assert "centroid" in kinds

    def test_fnet(self, tmp_path, capsys):
        out = tmp_path / "f.json"
        assert main(["build", "fnet", "--convex", "negative_entropy",
                     "--p", "0.5,0.5", "--q", "0.25,0.75", "-o", str(out)]) == 0
        main(["eval", str(out)])
        assert capsys.readouterr().out.strip() == "0.143841036226"

    def test_bad_masses_exit_2(self, capsys):
        assert main(["build", "fnet", "--convex", "negative_entropy",
                     "--p", "0.5,0.5", "--q", "0.9,0.75"]) == 2


class TestMatchApply:
    def test_matches_then_apply(self, tmp_path, capsys):
        spec = get_generator("quadratic", 1)
        from divnet import Edge, Node, build_network
        net = build_network(
            [Node("p", coord=(0.0,)), Node("q", coord=(1.0,))],
            [Edge("e1", "p", "q", 1.0), Edge("e2", "p", "q", 2.0)],
            "quadratic")
        path = tmp_path / "par.json"
        save_network(net, str(path))
        assert main(["matches", str(path), "--rule", "Summation"]) == 0
        found = json.loads(capsys.readouterr().out)
        fwd = [m for m in found if m["direction"] == "forward"][0]
        out = tmp_path / "merged.json"
        assert main(["apply", str(path), "--match", json.dumps(fwd),
                     "-o", str(out)]) == 0
        merged = json.loads(out.read_text())
        assert len(merged["edges"]) == 1
        assert merged["edges"][0]["weight"] == 3.0

    def test_stale_match_exit_2(self, bregman_file):
        bogus = {"rule": "Summation", "direction": "forward",
                 "nodes": [], "edges": ["e", "nope"], "params": {}}
        assert main(["apply", bregman_file, "--match", json.dumps(bogus)]) == 2


class TestReplayCommand:
    def test_replay_script(self, tmp_path, capsys):
        spec = get_generator("quadratic", 2)
        script = centroid_insertion_roundtrip(
            spec, [(0.0, 0.0), (2.0, 2.0)], [1.0, 1.0], (1.0, 1.0))
        path = tmp_path / "derivation.json"
        path.write_text(json.dumps(script))
        assert main(["replay", str(path)]) == 0
        out = capsys.readouterr().out
        assert out.count("ok") == 4
        assert "final network matches" in out

    def test_failing_replay_exit_1(self, tmp_path):
        spec = get_generator("quadratic", 2)
        script = centroid_insertion_roundtrip(
            spec, [(0.0, 0.0), (2.0, 2.0)], [1.0, 1.0], (1.0, 1.0))
        script["steps"][0]["expected_phi"] = 99.0
        path = tmp_path / "derivation.json"
        path.write_text(json.dumps(script))
        assert main(["replay", str(path)]) == 1


class TestVerify:
    def test_small_identity_suite_passes(self, capsys):
        assert main(["verify", "--suite", "identities", "--trials", "10",
                     "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "I1 quadratic" in out and "pass" in out

    def test_special_cases(self, capsys):
        assert main(["verify", "--suite", "special-cases", "--trials", "25",
                     "--seed", "2"]) == 0
        assert "NeymanChi2" in capsys.readouterr().out

    def test_rejects_nonpositive_tolerance(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--trials", "1", "--tol", "-1"])
        assert exc.value.code == 2


class TestExport:
    def test_dot(self, bregman_file, capsys):
        assert main(["export", bregman_file, "--format", "dot"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("digraph") and "solid" in out

    def test_json(self, bregman_file, capsys):
        assert main(["export", bregman_file, "--format", "json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["generator"] == "quadratic"


def test_user_defined_generator_file(tmp_path, capsys):
    # declarative separable table: 0.5*(x^2 - 1) satisfies F(1)=0
    gen = {"id": "halfsq_shift", "coefficients": [[0.5, 0, 0, 0, -0.5]]}
    gen_path = tmp_path / "gen.json"
    gen_path.write_text(json.dumps(gen))
    assert main(["build", "fnet", "--convex", str(gen_path),
                 "--p", "0.5,0.5", "--q", "0.25,0.75",
                 "-o", str(tmp_path / "f.json")]) == 0
    assert main(["eval", str(tmp_path / "f.json"),
                 "--convex", str(gen_path)]) == 0
    value = float(capsys.readouterr().out)
    # sum q * 0.5*((p/q)^2 - 1) by direct arithmetic
    import numpy as np
    p = np.array([0.5, 0.5])
    q = np.array([0.25, 0.75])
    assert abs(value - float(np.sum(q * 0.5 * ((p / q) ** 2 - 1.0)))) < 1e-9
