import math
import os
import subprocess

import pytest

import censet


def test_binary_reserve_half():
    br = censet.binary_reserve(0.5)
    assert br.s_star == pytest.approx(0.2, abs=1e-14)
    assert br.r_bin == pytest.approx(-math.log(0.8), abs=1e-14)
    s, risk = censet.balancing_oracle(0.5)
    assert abs(risk - br.r_bin) <= 1e-6


def test_table_row():
    assert abs(censet.binary_reserve(0.91).r_bin - 0.541) <= 1e-3
    g, t = censet.g_max(0.91)
    assert abs(g - 1.309) <= 1e-3
    assert 0.0 <= t <= 0.91
    assert censet.g_envelope(0.4, 0.0, 0.3) == pytest.approx(-math.log(0.7))


def test_geometry_example():
    obs = censet.make_observation(4, [(0, 1.0), (1, 0.0)])
    g = censet.geometry(obs)
    assert g.m == 2
    assert g.uk == pytest.approx(2.0 / (math.e + 3.0), rel=1e-14)
    assert abs(censet.brute_diameter_oracle(g) - g.uk) <= 1e-3
    assert censet.extremal_pair_tv(g) == pytest.approx(g.uk, abs=1e-12)
    assert censet.per_token_cap(g, 0.0) == pytest.approx(1.0 / (math.e + 1.0))
    sup, _ = censet.symmetric_worst_case_risk(g)
    assert censet.binary_reserve(g.uk).r_bin <= sup <= censet.g_max(g.uk)[0] + 1e-6


def test_parse_and_errors():
    obs = censet.parse_observation('{"vocab_size":3,"mode":"logprobs","topk":[{"token":1,"score":-0.1}]}')
    assert obs.k == 1 and obs.mode == "logprobs"
    assert censet.hidden_tail_mass(obs) == pytest.approx(-math.expm1(-0.1))
    with pytest.raises(censet.Error):
        censet.parse_observation('{"vocab_size":3,"mode":"logits","topk":[{"token":7,"score":0}]}')
    with pytest.raises(ValueError):
        censet.binary_reserve(2.0)


def test_verdicts():
    verdict, r_bin, _ = censet.critical_verdict(0.908, 0.1)
    assert verdict == "IMPOSSIBLE" and abs(r_bin - 0.538) <= 1e-3
    assert censet.critical_verdict(0.25, 0.1)[0] == "THRESHOLD"


def test_reference_and_normalized():
    g = censet.geometry(censet.make_observation(4, [(0, 1.0), (1, 0.0)]))
    rb = censet.reference_geometry(g, [0.0, 0.0, -1.0, -1.0], 0.5)
    assert abs(rb.ur - 0.2460) <= 1e-4
    obs = censet.make_observation(13, [(0, math.log(0.5)), (1, math.log(0.2)), (2, math.log(0.1))], "logprobs")
    ng = censet.normalized_geometry(obs)
    assert ng.condition == "DisjointSupports"
    assert ng.diameter == pytest.approx(0.2, abs=1e-12)


def test_teacher_sweep_deterministic():
    a = censet.generate_teacher(100, 8, "peaked", {"head_size": 1, "gap": 10.0}, seed=3)
    b = censet.generate_teacher(100, 8, "peaked", {"head_size": 1, "gap": 10.0}, seed=3)
    assert a == b
    rows = censet.ksweep(a, [1, 5, 20, 100])
    means = [r.uk_mean for r in rows]
    assert means == sorted(means, reverse=True)
    assert rows[-1].uk_mean == 0.0
    obs = censet.censor([3.0, 1.0, 2.0], 2)
    assert [t for t, _ in obs.revealed] == [0, 2]


@pytest.mark.skipif("CENSET_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_runs():
    out = subprocess.run([os.environ["CENSET_CLI"], "certify", "--u", "0.5", "--delta", "0.1"],
                         capture_output=True, text=True, check=True)
    assert '"command": "certify"' in out.stdout
