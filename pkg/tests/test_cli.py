import shutil

import pytest

from coxflat import golden
from coxflat.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def artifacts(run_dir):
    return {p.name: p.read_bytes() for p in sorted(run_dir.iterdir())}


def test_invariants_written_once(tmp_path, capsys):
    assert main(["invariants", "E7", "--cache", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "E7" / "invariants"
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(["manifest.txt"] + [f"v{d}.txt" for d in (2, 6, 8, 10, 12, 14, 18)])
    first = artifacts(out)
    assert main(["invariants", "--group", "E7", "--cache", str(tmp_path)]) == EXIT_OK
    assert artifacts(out) == first
    assert "v18: 122220 terms" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["invariants", "E8", "--degree", "7", "--cache", str(tmp_path)]) == EXIT_USAGE
    assert "no basic invariant of degree 7" in capsys.readouterr().err
    assert main(["metric", "F4", "--cache", str(tmp_path)]) == EXIT_USAGE
    assert main(["metric", "--cache", str(tmp_path)]) == EXIT_USAGE
    assert main(["metric", "E6", "--group", "E7", "--cache", str(tmp_path)]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE
    assert main(["verify", "E6", "--trials", "0", "--cache", str(tmp_path)]) == EXIT_USAGE


def test_oversize_expansion_is_refused(tmp_path, capsys):
    assert main(["invariants", "E8", "--cache", str(tmp_path)]) == EXIT_USAGE
    assert "too large" in capsys.readouterr().err
    assert main(["invariants", "E8", "--degree", "8", "--cache", str(tmp_path)]) == EXIT_OK


def test_e6_verify_against_fixtures(tmp_path, capsys):
    code = main(["verify", "E6", "--cache", str(tmp_path), "--against-fixtures", "--symbolic-wdvv"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    for name in ("wdvv-symbolic", "fixture-metric", "fixture-eta", "fixture-frame", "fixture-potential"):
        assert f"PASS {name}" in out


def test_solvers_give_identical_artifacts(tmp_path):
    for solver in ("exact", "modular"):
        assert main(["potential", "E6", "--cache", str(tmp_path), "--solver", solver]) == EXIT_OK
    a = artifacts(tmp_path / "E6" / "sigma2-exact-seed0")
    b = artifacts(tmp_path / "E6" / "sigma2-modular-seed0")
    a.pop("manifest.txt"), b.pop("manifest.txt")
    assert a == b


def test_corrupted_reference_is_reported(tmp_path, capsys):
    fx = tmp_path / "fixtures"
    shutil.copytree(golden.fixture_dir(), fx)
    path = fx / "E6" / "potential.txt"
    path.write_text(path.read_text().replace("+1/24*t2*t12^2", "+1/25*t2*t12^2"))
    code = main(["verify", "E6", "--cache", str(tmp_path / "c"), "--against-fixtures",
                 "--fixtures", str(fx)])
    out = capsys.readouterr().out
    assert code == EXIT_FAIL
    assert "FAIL fixture-checksums: modified: E6/potential.txt" in out
    assert "coefficient of t2*t12^2 is 1/24, expected 1/25" in out


def test_deleted_artifact_is_regenerated(tmp_path):
    assert main(["potential", "A3", "--cache", str(tmp_path)]) == EXIT_OK
    run_dir = tmp_path / "A3" / "sigma2-modular-seed0"
    before = artifacts(run_dir)
    (run_dir / "frame.txt").unlink()
    (run_dir / "metric.txt").write_text("tampered\n")
    assert main(["potential", "A3", "--cache", str(tmp_path)]) == EXIT_OK
    assert artifacts(run_dir) == before


def test_manifest_independent_of_threads_and_location(tmp_path, monkeypatch):
    assert main(["verify", "A3", "--cache", str(tmp_path / "one")]) == EXIT_OK
    monkeypatch.setenv("COXFLAT_THREADS", "2")
    assert main(["verify", "A3", "--cache", str(tmp_path / "two")]) == EXIT_OK
    one = artifacts(tmp_path / "one" / "A3" / "sigma2-modular-seed0")
    two = artifacts(tmp_path / "two" / "A3" / "sigma2-modular-seed0")
    assert one == two
    manifest = one["manifest.txt"].decode()
    assert "threads" not in manifest
    assert "flat_top_scale=1" in manifest and "artifact potential.txt sha256=" in manifest


def test_cache_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COXFLAT_CACHE", str(tmp_path))
    assert main(["flat", "A2"]) == EXIT_OK
    assert (tmp_path / "A2" / "sigma2-modular-seed0" / "frame.txt").exists()


def test_metric_scale_changes_run_directory(tmp_path):
    assert main(["metric", "A2", "--cache", str(tmp_path), "--metric-scale", "1/2"]) == EXIT_OK
    assert (tmp_path / "A2" / "sigma1_2-modular-seed0" / "metric.txt").exists()
    assert main(["metric", "A2", "--cache", str(tmp_path), "--metric-scale", "-1"]) == EXIT_USAGE


@pytest.mark.slow
def test_e8_verify_names_differing_coefficients(tmp_path, capsys):
    assert main(["verify", "E8", "--cache", str(tmp_path), "--against-fixtures"]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "PASS fixture-frame" in out and "PASS wdvv" in out
    assert out.count("coefficient of") == 3
