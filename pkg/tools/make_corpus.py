"""Regenerate the built-in synthetic corpus under src/cblab/data.

Run from the repository root: ``python3 tools/make_corpus.py``. The JSON
files are checked in; this script only exists so they can be reviewed and
rebuilt from one place.
"""
import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "cblab" / "data"
N = None


def sad(S=(N, N), U=(N, N)):
    return {"S": list(S), "U": list(U)}


def doc(name, points, chambers, walls=(), codim2=(), labels=None, comment=None, pinned=None):
    d = {"schema": "cb-lab/1", "name": name}
    if comment:
        d["comment"] = comment
    if labels:
        d["labels"] = labels
    d["points"] = points
    if pinned:
        d["pinned"] = pinned
    d["chambers"] = chambers
    if walls:
        d["walls"] = list(walls)
    if codim2:
        d["codim2"] = list(codim2)
    return d


def fold(wid, rich, poor, node, saddle):
    return {"id": wid, "kind": "CausticFold", "between": [rich, poor],
            "payload": {"node": node, "saddle": saddle}}


def bif(wid, src, tgt, s_a, j, s_b, k, alpha, beta, convention=False):
    w = {"id": wid, "kind": "Bifurcation", "between": [src, tgt],
         "payload": {"s_a": s_a, "j": j, "s_b": s_b, "k": k, "alpha": alpha, "beta": beta}}
    if convention:
        w["convention"] = True
    return w


docs = []

docs.append(doc("empty", {}, {}, comment="no generators at all"))

docs.append(doc(
    "fig1", {"un": 2, "un1": 2, "s1": 1, "s2": 1, "sn": 0, "sn1": 0},
    {"U1": {"saddles": {"s1": sad(["un", "un1"], ["sn", "sn1"]),
                        "s2": sad(["un", "un1"], ["sn", "sn1"])}}},
    comment="two saddles shared by two unstable and two stable nodes: four squares"))

docs.append(doc(
    "fig2", {"un1": 2, "un2": 2, "s": 1, "sn": 0},
    {"U1": {"saddles": {"s": sad(["un2", "un1"], ["sn", "sn"])}}},
    comment="degenerate square: both unstable branches of s reach sn"))

docs.append(doc(
    "fig3", {"n": 2, "un": 2, "s": 1, "s_i": 1, "sn": 0, "sn_l": 0},
    {"U1": {"local": True, "saddles": {"s": sad(["n", "un"], ["sn", N]),
                                       "s_i": sad(["n", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    comment="unstable birth-death node n; s_i inherits the connection from un after the pair cancels"))

docs.append(doc(
    "fig5", {"n": 2, "un_k": 2, "s": 1, "s_g": 1, "sn_g": 0},
    {"U1": {"saddles": {"s": sad(["un_k", "n"], ["sn_g", N]),
                        "s_g": sad(["un_k", "n"], ["sn_g", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}, "comment": "the degenerate square left behind"}},
    [fold("C", "U1", "U2", "n", "s")]))

docs.append(doc(
    "fig7",
    {"n": 2, "s": 1, "s_g": 1, "s_g1": 1, "s_g2": 1, "s_g3": 1, "s_g4": 1,
     "sn_g": 0, "sn_g1": 0, "sn_g2": 0, "sn_g3": 0, "sn_g4": 0},
    {"U1": {"saddles": {"s": sad(["n", N], ["sn_g", N]),
                        "s_g": sad(["n", N], ["sn_g", "sn_g1"]),
                        "s_g1": sad(["n", N], ["sn_g1", "sn_g2"]),
                        "s_g2": sad(["n", N], ["sn_g2", "sn_g3"]),
                        "s_g3": sad(["n", N], ["sn_g3", "sn_g4"]),
                        "s_g4": sad(["n", N], ["sn_g4", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    labels={"s_g1": "s_{g_1}", "sn_g1": "sn_{g_1}"},
    comment="a chain of squares hanging off n"))

fig8_pts = {"n": 2, "s": 1, "s_g": 1, "s_m": 1, "s_g1": 1, "sn_g": 0, "sn_g1": 0}
fig8_sad = {"s": sad(["n", N], ["sn_g", N]),
            "s_g": sad(["n", N], ["sn_g", N]),
            "s_m": sad(U=["sn_g", N]),
            "s_g1": sad(U=["sn_g", "sn_g1"])}
fig8_pins = {"s": {"U1": 1}, "s_g": {"U1": -1}, "s_m": {"U1": 1}, "s_g1": {"U1": 1}}
docs.append(doc(
    "fig8", fig8_pts,
    {"U1": {"saddles": fig8_sad},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")], pinned=fig8_pins,
    comment="chains (sn_g, s_m) and (sn_g, s_g1, sn_g1); signs as stated for this portrait"))

fig9_pts = dict(fig8_pts, un=2, s_j=1)
fig9_sad = dict(fig8_sad, s=sad(["n", "un"], ["sn_g", N]), s_j=sad(["un", N], ["sn_g", N]))
docs.append(doc(
    "fig9", fig9_pts,
    {"U1": {"saddles": fig9_sad},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")], pinned=dict(fig8_pins, s_j={"U1": 1}),
    comment="as fig8 with a second unstable node un joined to s, and its square partner s_j"))

fig10_pts = {"n": 2, "s": 1, "s_k": 1, "s_g": 1, "s_m": 1, "s_k1": 1, "s_n": 1, "s_g1": 1,
             "sn_k": 0, "sn_g": 0, "sn_k1": 0, "sn_g1": 0}
fig10_sad = {"s": sad(["n", N], ["sn_k", "sn_g"]),
             "s_k": sad(["n", N], ["sn_k", N]),
             "s_g": sad(["n", N], ["sn_g", N]),
             "s_m": sad(U=["sn_k", N]),
             "s_k1": sad(U=["sn_k", "sn_k1"]),
             "s_n": sad(U=["sn_g", N]),
             "s_g1": sad(U=["sn_g", "sn_g1"])}
fig10_pins = {"s": {"U2": 1}, "s_n": {"U1": 1}, "s_k": {"U1": 1},
              "s_g": {"U1": -1}, "s_m": {"U1": -1}}
docs.append(doc(
    "fig10", fig10_pts,
    {"U1": {"saddles": fig10_sad},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")], pinned=fig10_pins,
    comment="s joined to two stable nodes"))

fig11_pts = dict(fig10_pts, un1=2, s_h=1, s_j=1)
fig11_sad = dict(fig10_sad, s=sad(["n", "un1"], ["sn_k", "sn_g"]),
                 s_h=sad(["un1", N], ["sn_k", N]), s_j=sad(["un1", N], ["sn_g", N]))
docs.append(doc(
    "fig11", fig11_pts,
    {"U1": {"saddles": fig11_sad},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")], pinned=dict(fig10_pins, s_j={"U1": 1}, s_h={"U1": -1}),
    comment="as fig10 with a second unstable node un1 and the square partners s_h, s_j"))

docs.append(doc(
    "fig12", {"n": 0, "sn1": 0, "s": 1, "s1": 1, "s2": 1},
    {"U1": {"saddles": {"s": sad(U=["n", N]),
                        "s1": sad(U=["n", "sn1"]),
                        "s2": sad(U=["n", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    pinned={"s": {"U1": 1}, "s1": {"U1": 1}, "s2": {"U1": 1}},
    comment="stable birth-death node; s2 is connected to n only, s1 also to sn1"))

docs.append(doc(
    "fig13", {"n": 0, "sn": 0, "s": 1, "s1": 1, "s2": 1, "s3": 1, "t1": 1, "t2": 1},
    {"U1": {"saddles": {"s": sad(U=["sn", "n"]),
                        "s1": sad(U=["n", N]), "s2": sad(U=["n", N]), "s3": sad(U=["n", N]),
                        "t1": sad(U=["sn", N]), "t2": sad(U=["sn", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    pinned={"s": {"U1": -1}, "s1": {"U1": 1}, "s2": {"U1": 1}, "s3": {"U1": 1},
            "t1": {"U1": 1}, "t2": {"U1": 1}},
    labels={"t1": "s'_1", "t2": "s'_2"},
    comment="stable n, s also joined to sn; saddles s_l reach n, saddles s'_m reach sn"))

docs.append(doc(
    "fig14", {"un": 2, "n": 0, "sn": 0, "s": 1, "s1": 1, "s2": 1, "s3": 1},
    {"U1": {"saddles": {"s": sad(["un", N], ["sn", "n"]),
                        "s1": sad(["un", N], ["sn", "n"]),
                        "s2": sad(["un", N], ["sn", "n"]),
                        "s3": sad(["un", N], ["sn", "n"])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    comment="stable n; every saddle also reaches sn and is fed by un"))

docs.append(doc(
    "fig15", {"un": 2, "un1": 2, "s": 1, "s1": 1, "t1": 1, "sn": 0, "sn1": 0, "n": 0},
    {"U1": {"local": True, "saddles": {"s": sad([N, "un"], ["sn", "n"]),
                                       "s1": sad(["un", "un1"], ["sn", "sn1"]),
                                       "t1": sad(["un", "un1"], ["n", "sn1"])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")], labels={"t1": "s'_1"},
    comment="fragment: one stable branch of s comes from infinity"))

docs.append(doc(
    "fig16",
    {"un1": 2, "un2": 2, "vn1": 2, "vn2": 2, "s": 1, "s1": 1, "s2": 1, "t1": 1, "t2": 1,
     "sn": 0, "n": 0, "sn1": 0, "sn2": 0},
    {"U1": {"saddles": {"s": sad(["un2", "un1"], ["sn", "n"]),
                        "t2": sad(["un2", "vn2"], ["sn", "sn2"]),
                        "s2": sad(["un2", "vn2"], ["n", "sn2"]),
                        "t1": sad(["un1", "vn1"], ["sn", "sn1"]),
                        "s1": sad(["un1", "vn1"], ["n", "sn1"])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    labels={"vn1": "~un_1", "vn2": "~un_2", "t1": "s'_1", "t2": "s'_2"},
    comment="not contained in a flow-invariant compact set: squares at vn1, vn2 lack partners"))

docs.append(doc(
    "fig17", {"un1": 2, "unt": 2, "s": 1, "s1": 1, "s11": 1, "st": 1, "n": 0, "snt": 0},
    {"U1": {"saddles": {"s": sad(["un1", N], ["n", N]),
                        "s1": sad(["un1", "unt"], ["n", "snt"]),
                        "s11": sad(["un1", N], ["n", N]),
                        "st": sad(["unt", "un1"], ["snt", "n"])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    labels={"unt": "~un", "snt": "~sn", "s11": "s_{1_1}", "st": "~s"}))

docs.append(doc(
    "fig18", {"un1": 2, "unt": 2, "s": 1, "s1": 1, "sq": 1, "sth": 1, "n": 0},
    {"U1": {"saddles": {"s": sad(["un1", N], ["n", N]),
                        "s1": sad(["un1", "unt"], ["n", N]),
                        "sq": sad(["unt", N], ["n", N]),
                        "sth": sad(["unt", N])}},
     "U2": {"collapse": {"from": "U1", "pair": ["n", "s"]}}},
    [fold("C", "U1", "U2", "n", "s")],
    labels={"unt": "~un", "sq": "s_q", "sth": "~s_h"}))

docs.append(doc(
    "fig19", {"un": 2, "un1": 2, "un2": 2, "s1": 1, "s2": 1, "sn": 0, "sn1": 0, "sn2": 0},
    {"U1": {"local": True, "saddles": {"s1": sad(["un1", "un2"], ["sn2", "sn"]),
                                       "s2": sad(["un1", "un"], ["sn1", "sn2"])}},
     "U2": {"slide": {"from": "U1", "wall": "B"}}},
    [bif("B", "U1", "U2", "s1", "U1", "s2", "S1", "S1", "U2", convention=True)],
    comment="saddle-to-saddle separatrix from s1 into s2; the signs convention is imposed on U1"))

# three bifurcation lines through one point; only saddles matter here
tri_sad = {"s1": sad(), "s2": sad(), "s3": sad()}
docs.append(doc(
    "fig23", {"s1": 1, "s2": 1, "s3": 1},
    {"U1": {"saddles": tri_sad},
     "U2": {"slide": {"from": "U1", "wall": "B2_12"}},
     "U3": {"slide": {"from": "U2", "wall": "B1_23"}},
     "U4": {"slide": {"from": "U3", "wall": "B3_34"}},
     "U5": {"slide": {"from": "U4", "wall": "B2_45"}}},
    [bif("B2_12", "U1", "U2", "s2", "U2", "s3", "S1", "S1", "U2"),
     bif("B1_23", "U2", "U3", "s1", "U1", "s2", "S2", "S1", "U1"),
     bif("B3_34", "U3", "U4", "s1", "U1", "s3", "S1", "S1", "U1"),
     bif("B2_45", "U4", "U5", "s2", "U2", "s3", "S1", "S2", "U1"),
     bif("B1_51", "U5", "U1", "s1", "U1", "s2", "S2", "S2", "U2")],
    [{"kind": "BTriple", "loop": ["U1", "U2", "U3", "U4", "U5"],
      "walls": ["B2_12", "B1_23", "B3_34", "B2_45", "B1_51"]}],
    comment="B1 = s1 into s2, B2 = s2 into s3, forced half-line B3 = s1 into s3"))


def caustic_meets_b(name, points, rich, pair, payload, comment):
    """Full B line crossing C: U1, U2 above (poor), U1', U2' below (rich)."""
    chambers = {"U1p": {"saddles": rich},
                "U2p": {"slide": {"from": "U1p", "wall": "Blow"}},
                "U1": {"collapse": {"from": "U1p", "pair": list(pair)}},
                "U2": {"collapse": {"from": "U2p", "pair": list(pair)}}}
    walls = [fold("C1", "U1p", "U1", *pair), fold("C2", "U2p", "U2", *pair),
             bif("Blow", "U1p", "U2p", **payload), bif("Bup", "U1", "U2", **payload)]
    loop = [{"kind": "CausticMeetsB", "loop": ["U1", "U1p", "U2p", "U2"],
             "walls": ["C1", "Blow", "C2", "Bup"]}]
    return doc(name, points, chambers, walls, loop, labels={"U1p": "U_1'", "U2p": "U_2'"},
               comment=comment)


B12 = dict(s_a="s1", j="U1", s_b="s2", k="S1", alpha="S1", beta="U1")
docs.append(caustic_meets_b(
    "fig24a", {"n": 2, "unA": 2, "unB": 2, "unC": 2, "s": 1, "s1": 1, "s2": 1},
    {"s": sad(["n", "unC"]), "s1": sad(["unA", "n"]), "s2": sad(["unA", "unB"])},
    ("n", "s"), B12, "unstable n; s2's sliding stable branch picks up n on the far side"))
docs.append(caustic_meets_b(
    "fig24b", {"n": 0, "snA": 0, "snB": 0, "snC": 0, "s": 1, "s1": 1, "s2": 1},
    {"s": sad(U=["n", "snC"]), "s1": sad(U=["snA", N]), "s2": sad(U=["snA", "snB"])},
    ("n", "s"), B12, "stable n, neither s1 nor s2 connected to n"))
docs.append(caustic_meets_b(
    "fig24c", {"n": 0, "snA": 0, "snB": 0, "snC": 0, "s": 1, "s1": 1, "s2": 1},
    {"s": sad(U=["n", "snC"]), "s1": sad(U=["snA", "n"]), "s2": sad(U=["snA", "snB"])},
    ("n", "s"), B12, "stable n, only s1 connected to n, on both sides of B"))
docs.append(caustic_meets_b(
    "fig24d", {"n": 0, "snA": 0, "snB": 0, "s": 1, "s1": 1, "s2": 1},
    {"s": sad(U=["n", "snA"]), "s1": sad(U=["n", N]), "s2": sad(U=["n", "snB"])},
    ("n", "s"), B12, "stable n, s1 connected to n only in U1', s2 on both sides"))
docs.append(caustic_meets_b(
    "fig24e", {"n": 0, "snA": 0, "snC": 0, "s": 1, "s1": 1, "s2": 1},
    {"s": sad(U=["n", "snC"]), "s1": sad(U=["snA", N]), "s2": sad(U=["snA", "n"])},
    ("n", "s"), B12, "stable n, s1 connected to n only in U2', s2 on both sides"))


def caustic_ends_b(name, points, rich, pair, payload, comment, local=False):
    """B half-line ending on C: U1 above (poor), U1', U2' below (rich) split by B."""
    chambers = {"U1p": {"saddles": rich, "local": local},
                "U2p": {"slide": {"from": "U1p", "wall": "B"}},
                "U1": {"collapse": {"from": "U1p", "pair": list(pair)}}}
    walls = [fold("C1", "U1p", "U1", *pair), fold("C2", "U2p", "U1", *pair),
             bif("B", "U1p", "U2p", **payload)]
    loop = [{"kind": "CausticMeetsB", "loop": ["U1", "U1p", "U2p"], "walls": ["C1", "B", "C2"]}]
    return doc(name, points, chambers, walls, loop, labels={"U1p": "U_1'", "U2p": "U_2'"},
               comment=comment)


docs.append(caustic_ends_b(
    "fig25a", {"n": 2, "unA": 2, "s1": 1, "s2": 1, "sn1": 0},
    {"s1": sad(["n", "unA"], ["sn1", N]), "s2": sad(["n", "unA"], ["sn1", N])},
    ("n", "s1"), B12, "unstable n paired with s1; across B s2 trades n for unA"))
docs.append(caustic_ends_b(
    "fig25b", {"n": 2, "unA": 2, "s1": 1, "s2": 1, "sn1": 0},
    {"s1": sad(["unA", "unA"], ["sn1", N]), "s2": sad(["unA", "n"], ["sn1", "sn1"])},
    ("n", "s2"), B12,
    "unstable n paired with s2; s1's sliding branch reaches sn1 on both sides, as it must "
    "once s2 is gone"))
docs.append(caustic_ends_b(
    "fig25c", {"n": 0, "snA": 0, "s1": 1, "s2": 1},
    {"s1": sad(U=["n", N]), "s2": sad(U=["n", "snA"])},
    ("n", "s2"), B12, "stable n paired with s2, s1 connected to n in U1' only"))
docs.append(caustic_ends_b(
    "fig25d", {"n": 0, "snA": 0, "s1": 1, "s2": 1},
    {"s1": sad(U=["snA", N]), "s2": sad(U=["snA", "n"])},
    ("n", "s2"), B12, "stable n paired with s2, s1 connected to n in U2' only"))
docs.append(caustic_ends_b(
    "fig25e", {"n": 0, "snA": 0, "snB": 0, "s1": 1, "s2": 1},
    {"s1": sad(U=["snA", "n"]), "s2": sad(U=["snA", "snB"])},
    ("n", "s1"), B12, "stable n paired with s1"))


def transversal(name, points, rich, b1, b2, comment):
    """Two full B lines crossing: U1 bottom, U2 right, U3 top, U4 left."""
    chambers = {"U1": {"saddles": rich},
                "U2": {"slide": {"from": "U1", "wall": "B2_12"}},
                "U3": {"slide": {"from": "U2", "wall": "B1_23"}},
                "U4": {"slide": {"from": "U1", "wall": "B1_14"}}}
    walls = [bif("B2_12", "U1", "U2", **b2), bif("B1_23", "U2", "U3", **b1),
             bif("B2_43", "U4", "U3", **b2), bif("B1_14", "U1", "U4", **b1)]
    loop = [{"kind": "BTransversal", "loop": ["U1", "U2", "U3", "U4"],
             "walls": ["B2_12", "B1_23", "B2_43", "B1_14"]}]
    return doc(name, points, chambers, walls, loop, comment=comment)


docs.append(transversal(
    "fig26", {"un1": 2, "un2": 2, "s1": 1, "t1": 1, "s2": 1, "t2": 1, "sn1": 0, "sn2": 0},
    {"s1": sad(["un1", N], ["sn1", N]), "t1": sad(["un1", N], ["sn1", N]),
     "s2": sad(["un2", N], ["sn2", N]), "t2": sad(["un2", N], ["sn2", N])},
    dict(s_a="s1", j="U1", s_b="t1", k="S1", alpha="S1", beta="U1"),
    dict(s_a="s2", j="U1", s_b="t2", k="S1", alpha="S1", beta="U1"),
    "B1 = s1 into t1, B2 = s2 into t2, four distinct saddles"))
docs.append(transversal(
    "fig26shared", {"un1": 2, "a": 1, "b": 1, "d": 1, "sn1": 0, "sn3": 0},
    {"a": sad(["un1", N], ["sn1", "sn3"]), "b": sad(["un1", N], ["sn1", N]),
     "d": sad(["un1", N], ["sn3", N])},
    dict(s_a="a", j="U1", s_b="b", k="S1", alpha="S1", beta="U1"),
    dict(s_a="a", j="U2", s_b="d", k="S1", alpha="S1", beta="U1"),
    "one saddle a slides over b with one unstable branch and over d with the other"))

for d in docs:
    (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=1) + "\n")
print(len(docs), "documents")
