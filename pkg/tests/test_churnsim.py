import json
from fractions import Fraction as F

import pytest

from regenlab import churnsim
from regenlab.churnsim import SimConfig
from regenlab.tradeoff import SystemParams, mbr_point, msr_point

from conftest import GOLDEN


def point(n, k, d, M, which):
    base = SystemParams(n, k, d, F(M))
    pt = msr_point(base) if which == "msr" else mbr_point(base)
    return base.with_point(pt.alpha, pt.gamma)


MSR_423 = point(4, 2, 3, 2, "msr")


def test_golden_report():
    cfg = SimConfig(MSR_423, rounds=20, seed=1, mincut_every=5, payload=4)
    expected = (GOLDEN / "simulate_4_2_3_msr_seed1.json").read_text()
    assert churnsim.run(cfg).to_json() == expected


def test_msr_423_hundred_rounds():
    rep = churnsim.run(SimConfig(MSR_423, rounds=100, seed=1))
    assert all(r.decode_trials == 6 for r in rep.rounds)  # all pairs, exhaustively
    assert rep.decode_successes / rep.decode_trials >= 0.95
    assert rep.cumulative_bandwidth_units == 100 * 3
    assert F(rep.bandwidth_per_repair) * 100 == 150  # 100 repairs of 1.5 each


def test_zero_rounds():
    rep = churnsim.run(SimConfig(MSR_423, rounds=0, seed=4))
    assert rep.rounds == [] and rep.cumulative_bandwidth_units == 0
    assert rep.initial["decode_trials"] == 6
    assert rep.bandwidth_per_repair is None


def test_reproducible():
    cfg = SimConfig(point(7, 3, 5, 3, "mbr"), rounds=30, seed=9, mincut_every=3)
    assert churnsim.run(cfg).to_json() == churnsim.run(cfg).to_json()
    other = SimConfig(point(7, 3, 5, 3, "mbr"), rounds=30, seed=10, mincut_every=3)
    assert churnsim.run(cfg).to_json() != churnsim.run(other).to_json()


@pytest.mark.parametrize("failure", churnsim.FAILURE_POLICIES)
@pytest.mark.parametrize("helpers", churnsim.HELPER_POLICIES)
@pytest.mark.parametrize("which", ["msr", "mbr"])
def test_accounting_and_cuts_for_all_policies(failure, helpers, which):
    p = point(6, 3, 4, 3, which)
    rep = churnsim.run(SimConfig(p, rounds=25, failure=failure, helpers=helpers, seed=2, mincut_every=1, mincut_samples=3))
    u = rep.unit
    assert all(r.bandwidth_units == p.d * u["beta"] for r in rep.rounds)
    assert rep.cumulative_bandwidth_units == 25 * p.d * u["beta"]
    assert F(rep.bandwidth_per_repair) == p.gamma
    assert rep.mincut_checks == 75 and rep.mincut_violations == 0
    assert all(len(r.helpers) == p.d and r.failed not in r.helpers for r in rep.rounds)


def test_failure_policies_pick_expected_nodes():
    rep = churnsim.run(SimConfig(MSR_423, rounds=8, failure="oldest-first"))
    assert [r.failed for r in rep.rounds] == [1, 2, 3, 4, 5, 6, 7, 8]
    rep = churnsim.run(SimConfig(MSR_423, rounds=8, failure="round-robin"))
    assert [r.failed for r in rep.rounds] == [1, 2, 3, 4, 5, 6, 7, 8]
    rep = churnsim.run(SimConfig(MSR_423, rounds=8, helpers="adversarial"))
    for r in rep.rounds:
        assert r.newcomer - 1 in r.helpers or r.newcomer - 1 == r.failed


def test_sampled_collectors_above_exhaustive_limit():
    p = point(10, 5, 9, 1, "msr")
    rep = churnsim.run(SimConfig(p, rounds=3, collectors=7, seed=1))
    assert all(r.decode_trials == 7 for r in rep.rounds)
    assert rep.initial["decode_trials"] == 7


def test_payload_mode_agrees_with_coefficients():
    a = churnsim.run(SimConfig(MSR_423, rounds=40, seed=6))
    b = churnsim.run(SimConfig(MSR_423, rounds=40, seed=6, payload=5))
    assert [r.decode_successes for r in a.rounds] == [r.decode_successes for r in b.rounds]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(MSR_423, rounds=-1)
    with pytest.raises(ValueError):
        SimConfig(MSR_423, failure="youngest")
    with pytest.raises(ValueError):
        SimConfig(MSR_423, helpers="closest")


def test_json_schema_fields():
    doc = json.loads(churnsim.run(SimConfig(MSR_423, rounds=2, mincut_every=1)).to_json())
    assert set(doc) == {
        "config", "params", "unit", "initial", "rounds", "cumulative_bandwidth_units",
        "bandwidth_per_repair", "decode_trials", "decode_successes", "mincut_checks", "mincut_violations",
    }
    assert set(doc["rounds"][0]) == {
        "round", "failed", "newcomer", "helpers", "bandwidth_units", "overhead_symbols",
        "decode_trials", "decode_successes", "mincut",
    }
    assert set(doc["rounds"][0]["mincut"][0]) == {"collector", "value", "ok"}
