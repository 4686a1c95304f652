"""End-to-end command line checks, including exit codes and determinism."""

import json
from fractions import Fraction

import pytest

import hodgefem.cli as cli
import hodgefem.forms
from hodgefem.cli import CSV_HEADER, CSV_HEADER_SOLVE, main
from hodgefem.mesh import CRISSCROSS, generate_square_mesh, write_mesh


def _verify_args(out, simplices=5, triangles=5):
    return [
        "verify",
        "--simplices",
        str(simplices),
        "--triangles",
        str(triangles),
        "--out",
        str(out),
    ]


def test_verify_reports_all_green(tmp_path):
    out = tmp_path / "report.json"
    assert main(_verify_args(out)) == 0
    report = json.loads(out.read_text())
    assert report["failed"] == 0
    assert report["passed"] == len(report["checks"]) > 40
    names = {c["name"] for c in report["checks"]}
    assert any(name.startswith("star-star-sign") for name in names)


def test_verify_writes_to_stdout_by_default(capsys):
    assert main(["verify", "--simplices", "2", "--triangles", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["failed"] == 0


def test_verify_catches_seeded_defect(tmp_path, monkeypatch, capsys):
    # breaking the star sign must flip identity checks to FAIL
    monkeypatch.setattr(hodgefem.forms, "star_sign", lambda alpha: 1)
    out = tmp_path / "report.json"
    assert main(_verify_args(out)) == 1
    report = json.loads(out.read_text())
    assert report["failed"] > 0
    assert "FAIL" in capsys.readouterr().err


def test_interpolate_csv_is_deterministic(tmp_path, capsys):
    args = ["interpolate", "--refinements", "2,4", "--field", "polyflow"]
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(f1)]) == 0
    assert "fitted energy rate" in capsys.readouterr().err
    assert main(args + ["--out", str(f2)]) == 0
    text = f1.read_text()
    assert text == f2.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("2,") and lines[2].startswith("4,")


def test_solve_runs_oracle_and_is_stable_modulo_timing(tmp_path, capsys):
    args = ["solve", "--refinements", "2", "--oracle", "on"]
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(f1)]) == 0
    err = capsys.readouterr().err
    assert "oracle m=2" in err and "constraint residual" in err
    assert main(args + ["--out", str(f2)]) == 0

    def strip_timing(path):
        lines = path.read_text().strip().splitlines()
        assert lines[0] == CSV_HEADER_SOLVE
        return [ln.rsplit(",", 1)[0] for ln in lines]

    assert strip_timing(f1) == strip_timing(f2)


def test_basis_dump_schema_and_audit(tmp_path):
    out = tmp_path / "basis.jsonl"
    assert main(["basis", "--mesh-m", "2", "--out", str(out)]) == 0
    lines = [json.loads(ln) for ln in out.read_text().strip().splitlines()]
    audit = lines[-1]["audit"]
    functions = lines[:-1]
    assert len(functions) == 38
    assert audit["count_matches_nullity"] is True
    assert audit["nullity"] == 38
    assert audit["counts"] == {"DIV_PATCH": 15, "ROT_PATCH": 7, "ROT_CELL": 16}
    for fn in functions:
        assert fn["category"] in ("DIV_PATCH", "ROT_PATCH", "ROT_CELL")
        assert isinstance(fn["anchor"], int)
        assert 1 <= len(fn["cells"]) <= 2
        for idx, val in fn["entries"]:
            assert 0 <= idx < audit["product_dim"]
            Fraction(val)  # parses back exactly


def test_basis_reads_mesh_from_file(tmp_path):
    mesh_path = tmp_path / "mesh.txt"
    write_mesh(generate_square_mesh(2, CRISSCROSS), mesh_path)
    out = tmp_path / "basis.jsonl"
    assert main(["basis", "--mesh-file", str(mesh_path), "--out", str(out)]) == 0
    audit = json.loads(out.read_text().strip().splitlines()[-1])["audit"]
    assert audit["cells"] == 16
    assert audit["basis_count"] == 78


def test_config_preloads_defaults_and_flags_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"refinements": "2", "field": "affine", "quad-order": 4}))
    f1 = tmp_path / "a.csv"
    assert main(["--config", str(cfg), "interpolate", "--out", str(f1)]) == 0
    lines = f1.read_text().strip().splitlines()
    assert len(lines) == 2 and lines[1].startswith("2,")
    # affine interpolation is exact, so the energy error column is tiny
    assert float(lines[1].split(",")[6]) < 1e-10

    f2 = tmp_path / "b.csv"
    args = ["--config", str(cfg), "interpolate", "--refinements", "2,4", "--out", str(f2)]
    assert main(args) == 0
    assert len(f2.read_text().strip().splitlines()) == 3


def test_bad_usage_exits_with_code_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["interpolate", "--refinements", "two,four"])
    assert exc.value.code == 2
    missing = tmp_path / "missing.json"
    assert main(["--config", str(missing), "verify"]) == 2


def test_value_errors_map_to_usage_exit(tmp_path):
    out = tmp_path / "x.csv"
    assert main(["interpolate", "--refinements", "1", "--out", str(out)]) == 2


def test_numerical_failure_maps_to_exit_three(tmp_path, monkeypatch, capsys):
    def boom(system, tol):
        raise RuntimeError("solver blew up")

    monkeypatch.setattr(cli, "solve_system", boom)
    out = tmp_path / "x.csv"
    assert main(["solve", "--refinements", "2", "--out", str(out)]) == 3
    assert "solver blew up" in capsys.readouterr().err
