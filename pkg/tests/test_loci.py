import numpy as np
import pytest
from scipy.spatial import cKDTree

from cblab.corrections import induces_isomorphism, is_chain_map
from cblab.critical import SADDLE, UNSTABLE
from cblab.errors import MissingCorrection
from cblab.loci import (FOLD as FOLD_WALL, assemble_cb_diagram, detect_wall_on_segment,
                        saddle_splitting, trace_caustic)
from cblab.walk import walk_circle, walk_monodromy

from conftest import FOLD, QUADRATIC, UMBILIC
from test_acceptance import umbilic_cusp_oracle


def _deltoid(n=200001):
    th = np.linspace(0, 2 * np.pi, n)
    return cKDTree(np.column_stack([(np.cos(2 * th) + 2 * np.cos(th)) / 3,
                                    (2 * np.sin(th) - np.sin(2 * th)) / 3]))


def test_fold_caustic_is_the_vertical_axis():
    c = trace_caustic(FOLD)
    assert not c.is_empty()
    assert np.max(np.abs(c.points()[:, 0])) < 1e-6
    assert c.cusps == []


def test_quadratic_has_no_caustic():
    assert trace_caustic(QUADRATIC).is_empty()


def test_umbilic_caustic_lies_on_the_deltoid():
    # det Hess = 0 is the circle (y1 + 1/6)^2 + y2^2 = 1/36 mapped by grad f
    c = trace_caustic(UMBILIC, (-2, 2, -2, 2))
    d, _ = _deltoid().query(c.points())
    assert d.max() < 1e-4
    got = np.array(sorted(c.cusps))
    want = np.array(sorted(map(tuple, umbilic_cusp_oracle())))
    assert np.allclose(got, want, atol=1e-6)


def test_fold_wall_on_a_segment():
    (w,) = detect_wall_on_segment(FOLD, (-0.5, 0), (0.5, 0))
    assert w.kind == FOLD_WALL
    assert abs(w.x[0]) < 1e-6 and abs(w.x[1]) < 1e-9
    assert (w.payload.node.kind, w.payload.saddle.kind) == (UNSTABLE, SADDLE)


def test_umbilic_segments():
    (w,) = detect_wall_on_segment(UMBILIC, (0, 0), (1.5, 0.3))
    assert w.kind == FOLD_WALL
    assert _deltoid().query([w.x])[0][0] < 1e-5
    assert detect_wall_on_segment(UMBILIC, (1.5, 1.5), (1.5, -1.5)) == []


def test_no_walls_without_caustic():
    assert detect_wall_on_segment(QUADRATIC, (-1, -1), (1, 1)) == []


def test_splitting_needs_two_saddles():
    x = (0.75, 0)
    with pytest.raises(ValueError):
        saddle_splitting(FOLD, x, (-0.5, 0), (-0.5, 0))
    with pytest.raises(ValueError):
        saddle_splitting(FOLD, x, (-0.5, 0), (0.5, 0))


def test_quadratic_diagram_is_one_chamber():
    d = assemble_cb_diagram(QUADRATIC, grid_m=8)
    assert len(d.chambers) == 1 and d.walls == [] and d.codim2 == []
    assert d.chambers[0].portrait.counts() == (1, 0, 0)
    assert d.labels.shape == (8, 8)


def test_fold_diagram_layout(fold_run):
    d, _ = fold_run
    assert len(d.chambers) == 2 and len(d.walls) == 1 and d.codim2 == []
    (w,) = d.walls
    rich, poor = w.between
    assert sum(d.chamber(rich).portrait.counts()) == 2
    assert sum(d.chamber(poor).portrait.counts()) == 0
    # every lattice point sits on the side its x1 says
    xs = d.lattice.reshape(-1, 2)
    lab = d.labels.reshape(-1)
    assert set(lab[xs[:, 0] > 0]) == {rich} and set(lab[xs[:, 0] < 0]) == {poor}


def test_fold_wall_correction(fold_run):
    d, _ = fold_run
    (w,) = d.walls
    rich, poor = w.between
    cx = d.complexes()
    m = d.correction(rich, poor)
    assert is_chain_map(m, cx[rich], cx[poor])
    assert induces_isomorphism(m, cx[rich], cx[poor])


def test_umbilic_codim2_are_cusps(umbilic_run):
    d, _ = umbilic_run
    assert len(d.codim2) == 3 and {p["kind"] for p in d.codim2} == {"Cusp"}
    with pytest.raises(MissingCorrection):
        walk_monodromy(d, d.codim2[0])
    assert d.monodromy_reports() == []


@pytest.mark.parametrize("f,centre,radius", [(FOLD, (0, 0.3), 0.2), (UMBILIC, (1 / 6, 3 ** 0.5 / 6), 0.1)])
def test_loop_across_a_fold_twice_is_trivial(f, centre, radius):
    r = walk_circle(f, centre, radius)
    assert [s["kind"] for s in r.steps] == [FOLD_WALL, FOLD_WALL]
    assert r.is_identity
