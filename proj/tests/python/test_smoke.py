import os
from pathlib import Path

import pytest

import tpda

DATA = Path(os.environ.get("TPDA_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def load(name):
    return (DATA / name).read_text()


def test_counting_both_routes_agree():
    a = tpda.TrPDA.parse(load("counting.trpda"))
    assert a.check("equations") == "Nonempty"
    assert a.check("orbit-pda") == "Nonempty"


def test_empty_automaton():
    a = tpda.TrPDA.parse(load("empty.trpda"))
    assert a.check() == "Empty"
    with pytest.raises(Exception):
        a.check("no-such-route")


def test_dtpda_words():
    d = tpda.DtPDA.parse(load("dt1_obligation.dtpda"))
    assert d.accepts(load("dt1_accepted.word")) is True
    assert d.accepts(load("dt1_rejected.word")) is False
    assert d.sample(3, seed=5) == d.sample(3, seed=5)


def test_dtpda_pipeline_preserves_language():
    d = tpda.DtPDA.parse(load("dt1_obligation.dtpda")).wrap()
    u = d.simplify().untime_stack()
    t = u.to_trpda()
    assert t.timeless_stack()
    for w in d.sample(5, seed=1):
        assert t.accepts(w) is True


def test_equations():
    s = tpda.EqSystem.parse(load("zconst.eq"))
    assert s.nonempty("Z_eq_13") is True
    assert s.member("Z_eq_13", 13) is True
    assert s.member("Z_eq_13", 14) is False
    with pytest.raises(KeyError):
        s.nonempty("Nope")


def test_to_equations_roundtrip():
    a = tpda.TrPDA.parse(load("counting.trpda"))
    system, init = tpda.to_equations(a)
    again = tpda.EqSystem.parse(str(system))
    assert any(again.nonempty(x) for x in init)


def test_orbits_and_normal_form():
    (name, os_), = tpda.orbits(load("states.set"))
    assert name == "Q" and len(os_) == 6
    assert tpda.normal_form("x1 < x2 & x2 < x1 + 3", 2)
