"""Smoke test for the compiled `guarantees` module.

Build it first, e.g. `maturin develop --release -m crates/py/Cargo.toml`,
then run `pytest python/`.
"""
from fractions import Fraction

import pytest

guarantees = pytest.importorskip("guarantees")


def test_constructors_and_text():
    v = guarantees.vt(3, 6)
    assert str(v) == "0,1/3,1/3,1/3,0,0"
    assert v.probs == [0, Fraction(1, 3), Fraction(1, 3), Fraction(1, 3), 0, 0]
    assert guarantees.RankLottery([0, "1/3", Fraction(1, 3), "1/3", 0, 0]) == v
    with pytest.raises(ValueError):
        guarantees.RankLottery([0.5, 0.5])
    with pytest.raises(ValueError, match="position"):
        guarantees.RankLottery("1/2,1/x")


def test_duality_and_dominance():
    assert guarantees.dual(guarantees.vt(3, 6)) == guarantees.rd(3, 6)
    assert guarantees.uniform(6).dominates(guarantees.RankLottery("1/6,1/3,1/6,1/6,0,1/6"))


def test_feasibility_and_maximality():
    report = guarantees.is_feasible(guarantees.rd(3, 6), 3)
    assert report["verdict"] == "feasible"
    report = guarantees.is_maximal(guarantees.RankLottery("0,1,0,0,0,0"), 3)
    assert report["verdict"] == "dominated"
    assert guarantees.RankLottery(report["improver"]).dominates(guarantees.RankLottery("0,1,0,0,0,0"))


def test_implementation_at_a_profile():
    profile = guarantees.Profile("1 2 3 / 3 2 1")
    assert profile.n == 2 and profile.p == 3
    assert guarantees.implement(guarantees.uniform(3), profile) is not None
    assert guarantees.implement(guarantees.RankLottery("0,0,1"), profile) is None


def test_composition_and_protocols():
    assert str(guarantees.canonical("RD,VT", 3, 7)) == "1/4,1/4,0,1/4,0,0,1/4"
    assert len(guarantees.canonical_all(3, 7)) == 6
    assert guarantees.worst_case_guarantee("veto(1); uniform", 3, 6) == guarantees.vt(3, 6)


def test_suite():
    result = guarantees.run_suite("duality", seed=3)
    assert all(check["pass"] for check in result["checks"])
