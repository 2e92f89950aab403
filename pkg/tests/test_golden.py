import shutil

import pytest

from coxflat import golden
from coxflat.groups import group_spec
from coxflat.polycore import parse_poly


@pytest.fixture
def fixture_copy(tmp_path):
    dst = tmp_path / "fixtures"
    shutil.copytree(golden.fixture_dir(), dst)
    return dst


def test_checksums_intact():
    assert golden.verify_checksums() == []


def test_checksums_detect_edits(fixture_copy):
    path = fixture_copy / "E6" / "frame.txt"
    path.write_text(path.read_text().replace("+1*u2", "+2*u2", 1))
    assert golden.verify_checksums(fixture_copy) == ["E6/frame.txt"]


def test_fixture_groups():
    assert golden.fixture_groups() == ["E6", "E7", "E8"]


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_errata_fix_every_grading_violation(name):
    raw = golden.load_fixtures(name, errata=False)
    fixed = golden.load_fixtures(name)
    assert len(golden.grading_violations(raw)) == len(fixed.applied)
    assert golden.grading_violations(fixed) == []


def test_errata_inventory():
    errata = golden.load_errata()
    assert [(e.group, e.kind, e.key) for e in errata] == [
        ("E6", "metric", "u5,u9"), ("E6", "metric", "u6,u8"),
        ("E7", "potential", "F"), ("E8", "potential", "F")]


def _add_erratum(directory, line):
    path = directory / "errata.txt"
    path.write_text(path.read_text() + line + "\n")


def test_erratum_of_correct_degree_is_refused(fixture_copy):
    # a real coefficient discrepancy may not be hidden as an erratum
    _add_erratum(fixture_copy, "E8 potential F : +143/103680*t2*t8^2*t12^2*t20 -> +143/311040*t2*t8^2*t12^2*t20")
    with pytest.raises(golden.FixtureError, match="not forced by grading"):
        golden.load_fixtures("E8", directory=fixture_copy)


def test_erratum_must_keep_coefficient(fixture_copy):
    path = fixture_copy / "errata.txt"
    path.write_text(path.read_text().replace("-> +13/8470*t14^3*t20", "-> +1/8470*t14^3*t20"))
    with pytest.raises(golden.FixtureError, match="keep the coefficient"):
        golden.load_fixtures("E8", directory=fixture_copy)


def test_erratum_must_match_printed_term(fixture_copy):
    path = fixture_copy / "errata.txt"
    path.write_text(path.read_text().replace("+56/5*u2^2*u5^2 -> +56/5", "+57/5*u2^2*u5^2 -> +57/5"))
    with pytest.raises(golden.FixtureError, match="does not match"):
        golden.load_fixtures("E6", directory=fixture_copy)


def test_reader_rejects_malformed(tmp_path):
    ring = group_spec("E6").generator_ring
    bad = tmp_path / "x.txt"
    bad.write_text("u2,u2 +4*u2\n")
    with pytest.raises(golden.FixtureError):
        golden.read_entries(bad, ring)
    bad.write_text("a = +1*u2\na = +1*u2\n")
    with pytest.raises(golden.FixtureError, match="duplicate"):
        golden.read_entries(bad, ring)


def test_diff_names_coefficient():
    ring = group_spec("E8").flat_ring
    want = parse_poly("+1/3*t2^27*t8+1*t30", ring)
    got = parse_poly("+1*t30", ring)
    assert golden.diff_polys("potential", want, got) == [
        "potential: coefficient of t2^27*t8 is 0, expected 1/3"]


def test_e8_potential_differs_in_three_coefficients(run):
    fs = golden.load_fixtures("E8")
    diffs = golden.compare_potential(fs, run("E8").potential.F)
    assert len(diffs) == 3
    assert any("t2^27*t8 is 0, expected 128256128/8649755859375" in d for d in diffs)


def test_expected_degrees():
    g = group_spec("E6")
    assert golden.expected_degree(g, "metric", "u5,u9") == 12
    assert golden.expected_degree(g, "eta", "u5,u9") == 0
    assert golden.expected_degree(g, "frame", "u12") == 12
    assert golden.expected_degree(g, "potential", "F") == 26
