import hashlib
import json

import pytest

from ellipticlab.cli import main, parse_complex, parse_complex_list


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_parse_complex():
    assert parse_complex("2.25+0i") == 2.25
    assert parse_complex("1+i") == 1 + 1j
    assert parse_complex("-i") == -1j
    assert parse_complex("2i") == 2j
    assert parse_complex("-3/2") == -1.5
    assert parse_complex("7/4i") == 1.75j
    assert parse_complex("1e-3-2.5e1j") == 0.001 - 25j
    assert parse_complex_list("2i, -3/2,1+i") == [2j, -1.5, 1 + 1j]
    with pytest.raises(ValueError):
        parse_complex("1+x")
    with pytest.raises(ValueError):
        parse_complex("++1")


def test_theory_prints_limits(tmp_path, capsys):
    assert run(tmp_path, "theory", "--rho", "0.5", "--z", "2.25+0i") == 0
    out = capsys.readouterr().out
    assert "m(z) = -0.5+0i" in out
    assert "H^-1(z) = 2+0i" in out
    assert "dist(z, E_rho) = 0.75" in out
    data = json.loads((tmp_path / "theory.json").read_text())
    assert data["dist_to_ellipse"] == pytest.approx(0.75)


def test_theory_inside(tmp_path, capsys):
    assert run(tmp_path, "theory", "--rho", "0.5", "--z", "0.5") == 0
    assert "undefined" in capsys.readouterr().out


def test_sample_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "sample", "--n", "2", "--rho", "0", "--seed", "1", "--format", "csv") == 0
    assert run(b, "sample", "--n", "2", "--rho", "0", "--seed", "1", "--format", "csv") == 0
    assert (a / "sample.csv").read_bytes() == (b / "sample.csv").read_bytes()
    assert len((a / "sample.csv").read_text().splitlines()) == 2


def test_manifest_hashes(tmp_path):
    run(tmp_path, "sample", "--n", "3", "--seed", "4", "--format", "csv")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "sample" and man["started"] <= man["finished"]
    assert [a["path"] for a in man["artifacts"]] == ["sample.csv"]
    for art in man["artifacts"]:
        data = (tmp_path / art["path"]).read_bytes()
        assert art["sha256"] == hashlib.sha256(data).hexdigest()
        assert art["git_blob"] == hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def test_usage_errors(tmp_path, capsys):
    assert main(["nosuch"]) == 2
    assert run(tmp_path, "theory", "--unknown-flag", "1") == 2
    assert run(tmp_path, "radius", "--n", "300,100") == 2
    assert run(tmp_path, "radius", "--trials", "0") == 2
    capsys.readouterr()


def test_gate_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema_version": 1, "n_list": [50], "trials": 1, "rho": 0.0, "tolerances": {"radius": 1e-9}}))
    assert main(["radius", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "FAIL radius:radius" in capsys.readouterr().out


def test_config_flags_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema_version": 1, "n_list": [50], "trials": 1, "rho": 0.0, "seed": 3}))
    out = tmp_path / "o"
    assert main(["radius", "--config", str(cfg), "--rho", "0.5", "--trials", "2", "--out", str(out)]) == 0
    rep = json.loads((out / "radius.json").read_text())
    assert rep["config"]["rho"] == 0.5 and rep["config"]["trials"] == 2 and rep["seed"] == 3
    capsys.readouterr()


def test_mean_and_outliers_flags(tmp_path, capsys):
    assert run(tmp_path / "m", "mean", "--mu", "1", "--n", "300", "--trials", "2", "--rho", "0.5") == 0
    assert run(tmp_path / "o", "outliers", "--eigs", "2i,-3/2,1+i", "--n", "400", "--trials", "2", "--delta", "0.05", "--format", "csv") == 0
    header = (tmp_path / "o" / "outliers.csv").read_text().splitlines()[0]
    assert "count_match" in header
    capsys.readouterr()


def test_gamma_and_condition_commands(tmp_path, capsys):
    assert run(tmp_path / "g", "gamma", "--n", "200", "--trials", "1", "--z", "2.25,3i") == 0
    rep = json.loads((tmp_path / "g" / "gamma.json").read_text())
    assert rep["config"]["params"]["z_grid"] == [[2.25, 0.0], [0.0, 3.0]]
    assert run(tmp_path / "c", "condition", "--n", "200", "--trials", "1", "--z", "3") == 0
    capsys.readouterr()


def test_density_command(tmp_path, capsys):
    assert run(tmp_path, "density", "--rho", "0", "--z", "0", "--format", "csv") == 0
    lines = (tmp_path / "density.csv").read_text().splitlines()
    assert lines[0] == "x,p"
    assert "support gap = 0" in capsys.readouterr().out


def test_figure1(tmp_path, capsys):
    assert run(tmp_path, "figure1", "--n", "1000", "--seed", "7") == 0
    svg = (tmp_path / "figure1.svg").read_text()
    circles = [l for l in svg.splitlines() if 'stroke="#d62728"' in l]
    assert len(circles) == 3
    # centres 7/4 i, -11/6, 5/4 + 3/4 i; radius 1000^(-1/4) on the fixed canvas
    scale = float(svg.split(" px per unit")[0].rsplit(" ", 1)[1])
    r = 1000 ** -0.25 * scale
    assert all(f'r="{r:.3f}"' in c for c in circles)
    data = json.loads((tmp_path / "figure1.json").read_text())
    assert len(data["observed_outliers"]) == 3
    assert sorted(p for p in (tmp_path).iterdir()) == sorted(tmp_path / n for n in ("figure1.svg", "figure1.json", "manifest.json"))
    capsys.readouterr()


def test_nothing_written_outside_out(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "only_here"
    main(["theory", "--z", "3", "--out", str(out)])
    assert [p.name for p in tmp_path.iterdir()] == ["only_here"]
    capsys.readouterr()


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        from ellipticlab.cli import build_parser

        build_parser().parse_args(["lsv", "--help"])
    assert "CSV columns" in capsys.readouterr().out
