"""Pipeline verdicts, report determinism, suite expectations."""

import json

import pytest

from bershift.classify import (
    ClassifyConfig,
    PAPER_EXAMPLES_MANIFEST,
    classify,
    load_manifest,
    run_suite,
)
from bershift.constructions import build_cor52, build_example55, build_thm54, build_thmD
from bershift.groups import IntegerGroup
from bershift.measures import ConstantFamily, two_point

FAST = ClassifyConfig(lattice_samples=40, lattice_windows=(8, 16))


def test_constant_family_is_II1():
    rep = classify(ConstantFamily(IntegerGroup(), two_point(0.5)), FAST)
    assert "II_1" in rep.verdict
    assert "ii1" in rep.supporting_tables


def test_example55_is_III_half():
    rep = classify(build_example55(0.5), FAST)
    assert "lambda=0.5" in rep.verdict
    assert "t_invariant" in rep.supporting_tables
    assert "alpha" in rep.supporting_tables


def test_thm54_is_IIinf():
    rep = classify(build_thm54(4).family, FAST)
    assert "II_infty" in rep.verdict
    assert "iiinf" in rep.supporting_tables


def test_thmD_is_III1():
    rep = classify(build_thmD(), FAST)
    assert "III_1" in rep.verdict
    assert "no lattice concentration" in rep.verdict


def test_report_structure_invariants():
    rep = classify(build_example55(0.5), FAST)
    body = rep.to_json()
    assert body["spec_version"] == "1"
    assert body["supporting_tables"], "verdict must cite tables"
    for tid in body["supporting_tables"]:
        assert body["tables"].get(tid) is not None
    # III_lambda requires both the T-invariant table and the alpha evidence
    assert body["tables"]["t_invariant"] and body["tables"]["alpha"]
    assert isinstance(body["caveats"], list)
    # desk substitutions surface as caveats
    assert any("truncated" in c for c in body["caveats"])


def test_reports_byte_identical_on_rerun():
    cfg = ClassifyConfig(seed=20240601, lattice_samples=30, lattice_windows=(8, 16))
    a = classify(build_example55(0.5), cfg).dumps()
    b = classify(build_example55(0.5), cfg).dumps()
    assert a == b
    c = classify(build_cor52(0.5), cfg).dumps()
    d = classify(build_cor52(0.5), cfg).dumps()
    assert c == d


def test_suite_paper_examples_and_negative_control():
    manifest = load_manifest("paper-examples")
    assert manifest is PAPER_EXAMPLES_MANIFEST
    small = {
        "name": "small",
        "scenarios": [
            {
                "name": "constant",
                "construct": {"name": "constant", "params": {"a": 0.5}},
                "config": {"lattice_samples": 20, "lattice_windows": [4, 8]},
                "expect": {"verdict_contains": "II_1"},
            },
            {
                "name": "wrong-expectation",
                "construct": {"name": "constant", "params": {"a": 0.5}},
                "config": {"lattice_samples": 20, "lattice_windows": [4, 8]},
                "expect": {"verdict_contains": "III_lambda"},
            },
        ],
    }
    result = run_suite(small, seed=20240601)
    assert not result.ok  # the deliberately wrong expectation fails
    by_name = {r["name"]: r for r in result.results}
    assert by_name["constant"]["ok"]
    assert not by_name["wrong-expectation"]["ok"]
    empty = run_suite({"name": "empty", "scenarios": []})
    assert empty.ok and empty.results == []
    with pytest.raises(ValueError):
        load_manifest("unknown-manifest")


def test_config_round_trip():
    cfg = ClassifyConfig.from_json({"seed": 7, "windows": [2, 4], "lattice_samples": 10})
    assert cfg.seed == 7 and cfg.windows == (2, 4)
    body = cfg.to_json()
    assert body["spec_version"] == "1"
