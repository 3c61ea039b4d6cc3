import numpy as np
import pytest

from cblab.critical import find_critical_points
from cblab.flow import count_connections, extract_portrait, integrate_flow, monotone_along
from cblab.synthetic import builtin

from conftest import FOLD, QUADRATIC, UMBILIC


def test_backward_flow_falls_into_the_source():
    path, term = integrate_flow(QUADRATIC, (0, 0), (1, 0), "backward")
    assert term.kind == "Node" and term.id == 0
    assert np.hypot(*path[-1]) < 0.1


def test_forward_flow_leaves_the_window():
    _, term = integrate_flow(QUADRATIC, (0, 0), (0.5, 0.5), "forward", region=(-2, 2, -2, 2))
    assert term.kind == "Exit"


def test_start_inside_capture_ball_stops_at_once():
    path, term = integrate_flow(QUADRATIC, (0.2, 0.1), (0.2, 0.1), "backward")
    assert len(path) == 1 and term.kind == "Node"


@pytest.fixture(scope="module")
def fold_portrait():
    return extract_portrait(FOLD, (0.75, 0))


def test_fold_has_one_connecting_line(fold_portrait):
    p = fold_portrait
    (s,) = p.saddles
    (un,) = p.ids(2)
    assert len(count_connections(p, un, s)) == 1
    assert len(p.edges) == 1
    assert all(p.branches[(s, b)] is None for b in ("U1", "U2"))


def test_fold_stable_branch_runs_along_the_axis(fold_portrait):
    # y2 decouples: the connecting orbit is the segment of y2 = 0 between the two roots
    (link,) = [sp for sp in fold_portrait.separatrices if sp.terminus.kind == "Node"]
    assert np.max(np.abs(link.polyline[:, 1])) < 1e-9
    assert link.polyline[0, 0] < link.polyline[-1, 0]
    assert np.allclose(link.polyline[-1], (0.5, 0), atol=0.05)


def test_separatrices_are_monotone():
    for f, x in ((FOLD, (0.75, 0)), (UMBILIC, (0.05, 0.02)), (UMBILIC, (1.5, 0.4))):
        p = extract_portrait(f, x)
        for sp in p.separatrices:
            direction = "forward" if sp.branch[0] == "U" else "backward"
            assert monotone_along(f, x, sp.polyline, direction)


def test_umbilic_interior_portrait_is_consistent():
    p = extract_portrait(UMBILIC, (0.05, 0.02))
    assert len(p.points) == 4 and sum(p.counts()) == 4
    p.validate()
    assert len(p.branches) == 4 * len(p.saddles)


def test_quadratic_has_no_edges():
    p = extract_portrait(QUADRATIC, (0.3, -0.4))
    assert p.counts() == (1, 0, 0) and p.edges == []


def test_double_connection_is_counted_twice():
    p = builtin("fig2")["U1"]
    assert len(count_connections(p, "un1", "s")) == 1
    assert len(count_connections(p, "s", "sn")) == 2
    assert count_connections(p, "sn", "s") == []


def test_critical_points_found_inside_window_only():
    pts = find_critical_points(QUADRATIC, (5, 5), (-1, 1, -1, 1))
    assert pts == []
