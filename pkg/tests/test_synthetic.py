import copy

import pytest

from cblab.errors import SchemaError
from cblab.synthetic import builtin, builtin_names, builtin_portrait, collapse, load_synthetic

import identities


def _edges(p):
    return sorted((str(e.src), str(e.dst)) for e in p.edges)


def test_explicit_chamber_edges():
    p = builtin("fig19")["U1"]
    assert p.counts() == (3, 2, 3)
    assert _edges(p) == [("s1", "sn"), ("s1", "sn2"), ("s2", "sn1"), ("s2", "sn2"),
                         ("un", "s2"), ("un1", "s1"), ("un1", "s2"), ("un2", "s1")]
    assert _edges(builtin_portrait("fig19_U1")) == _edges(p)


def test_empty_document():
    d = load_synthetic({"schema": "cb-lab/1", "name": "nothing", "points": {}, "chambers": {}})
    assert d.portraits == {} and d.walls == [] and d.monodromy_reports() == []
    assert "empty" in builtin_names()


def test_loop_fixture_has_five_chambers():
    d = builtin("fig23")
    assert len(d.portraits) == 5
    (pt,) = [p for p in d.codim2 if p["kind"] != "Cusp"]
    assert len(pt["loop"]) == 5


def test_collapse_removes_the_pair():
    p = builtin("fig19")["U1"]
    q = collapse(p, "un2", "s1")
    assert q.counts() == (2, 1, 3)
    assert "s1" not in q.saddles


_BASE = {"schema": "cb-lab/1", "name": "t", "points": {"un": 2, "s": 1, "sn": 0},
         "chambers": {"U1": {"saddles": {"s": {"S": ["un", None], "U": ["sn", None]}}}}}


def _broken(edit):
    doc = copy.deepcopy(_BASE)
    edit(doc)
    return doc


@pytest.mark.parametrize("doc", [
    _broken(lambda d: d.update(schema="cb-lab/0")),
    _broken(lambda d: d["points"].update(x=3)),
    _broken(lambda d: d["chambers"]["U1"]["saddles"]["s"]["S"].__setitem__(0, "ghost")),
    _broken(lambda d: d["chambers"]["U1"]["saddles"]["s"]["S"].__setitem__(0, "sn")),
    _broken(lambda d: d.update(walls=[{"id": "W", "kind": "Shear", "between": ["U1", "U2"], "payload": {}}])),
    _broken(lambda d: d.update(walls=[{"id": "W", "kind": "CausticFold", "between": ["U1", "U9"],
                                       "payload": {"node": "un", "saddle": "s"}}])),
])
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        load_synthetic(doc)


def test_base_document_is_valid():
    d = load_synthetic(_BASE)
    assert _edges(d["U1"]) == [("s", "sn"), ("un", "s")]


@pytest.mark.parametrize("name", sorted(identities.REGISTRY))
def test_identity(name):
    assert identities.REGISTRY[name]() is True
