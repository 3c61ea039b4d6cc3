import json
from fractions import Fraction

import numpy as np
import pytest

from cblab import report
from cblab.cli import main

from conftest import FOLD


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out.strip() else out), err


def test_portrait_right_of_the_fold(capsys, tmp_path):
    code, doc, err = run(capsys, "portrait", "--preset", "fold", "--at", "0.75,0", "--svg-dir", str(tmp_path))
    assert code == 0 and doc["schema"] == "cb-lab/1"
    assert len(doc["portrait"]["points"]) == 2
    assert len(doc["portrait"]["edges"]) == 1
    assert doc["complex"]["betti"] == [0, 0, 0]
    (svg,) = tmp_path.glob("portrait-*.svg")
    assert svg.read_text().startswith("<svg")


def test_quadratic_diagram(capsys):
    code, doc, _ = run(capsys, "diagram", "--preset", "quadratic", "--no-svg")
    assert code == 0
    assert len(doc["diagram"]["chambers"]) == 1 and doc["diagram"]["walls"] == []


def test_caustic_of_the_fold(capsys, tmp_path):
    code, doc, _ = run(capsys, "caustic", "--preset", "fold", "--no-svg")
    assert code == 0 and doc["caustic"]["cusps"] == []


def test_monodromy_of_a_synthetic_loop(capsys):
    code, doc, _ = run(capsys, "monodromy", "--synthetic", "fig23")
    assert code == 0 and doc["all_identity"] is True
    (rep,) = doc["reports"]
    assert rep["is_identity"] is True


def test_wallcross_slide(capsys):
    code, doc, _ = run(capsys, "wallcross", "--synthetic", "fig19", "--wall", "B")
    assert code == 0
    assert doc["map"]["matrices"]["1"] == [[1, 0], [-1, 1]]


def test_homology_per_chamber(capsys):
    code, doc, _ = run(capsys, "homology", "--synthetic", "fig23")
    assert code == 0 and len(doc["betti"]) == 5
    assert len({tuple(b) for b in doc["betti"].values()}) == 1


def test_weight_of_the_quadratic_source(capsys):
    # h(x) = |x|^2 / 2 on the only sheet, so h = 0 at the origin
    code, doc, _ = run(capsys, "weight", "--preset", "quadratic", "--at", "0.5,0", "--w", "1,0", "--sheet", "0")
    assert code == 0
    assert doc["h"] == pytest.approx(0.125)
    assert doc["modulus"] == pytest.approx(np.exp(np.pi * 0.125))
    assert doc["argument"] == pytest.approx(np.pi)


def test_selftest_passes(capsys):
    code, doc, _ = run(capsys, "selftest")
    assert code == 0 and doc["passed"] is True
    assert doc["fixtures"]["fig16"]["raised"] == "NoCoherentOrientation"


@pytest.mark.parametrize("argv", [
    ["diagram"],
    ["diagram", "--preset", "nope"],
    ["portrait", "--config", "/nonexistent.json", "--at", "0,0"],
    ["portrait", "--preset", "fold", "--at", "zero"],
    ["wallcross", "--synthetic", "fig19", "--wall", "Z"],
    ["weight", "--preset", "fold", "--at", "0.75,0", "--w", "0,0", "--sheet", "7"],
])
def test_configuration_errors_exit_2(capsys, argv):
    assert main(argv) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_usage_error_exits_2(capsys):
    assert main(["portrait", "--preset", "fold"]) == 2
    assert main(["frobnicate"]) == 2


def test_domain_errors_exit_1(capsys):
    assert main(["portrait", "--preset", "fold", "--at", "0,0", "--no-svg"]) == 1
    assert capsys.readouterr().err.startswith("OnCaustic:")


def test_output_file(tmp_path, capsys):
    out = tmp_path / "doc.json"
    assert main(["homology", "--synthetic", "fig1", "--output", str(out)]) == 0
    # two sources, two saddles, two sinks joined in cancelling squares: d0 and d1 have rank 1
    assert json.loads(out.read_text())["betti"] == {"U1": [1, 0, 1]}


def test_canonical_json():
    assert report.canonical(-0.0) == 0.0 and str(report.canonical(-0.0)) == "0.0"
    assert report.canonical(Fraction(-3, 6)) == {"num": -1, "den": 2}
    assert report.canonical(np.float64(1 / 3)) == 0.333333333333
    assert report.canonical((np.int64(2), [True, None])) == [2, [True, None]]
    text = report.dumps({"b": 1, "a": [0.1]})
    assert json.loads(text)["schema"] == "cb-lab/1"
    assert text.index('"a"') < text.index('"b"')
    with pytest.raises(TypeError):
        report.canonical(object())


def test_svg_names_carry_a_timestamp(tmp_path):
    import datetime as dt
    p = report.svg_name("diagram", tmp_path, dt.datetime(2026, 1, 2, 3, 4, 5, 6))
    assert p.name == "diagram-20260102T030405000006Z.svg"


def test_portrait_svg_is_well_formed():
    import xml.etree.ElementTree as ET
    from cblab.flow import extract_portrait
    root = ET.fromstring(report.portrait_svg(extract_portrait(FOLD, (0.75, 0)), (-3, 3, -3, 3)))
    assert root.tag.endswith("svg")
