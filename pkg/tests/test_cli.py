import json

import pytest

from arwlab.cli import main, parse_grid, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_grid():
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("0:0.2:0.1") == pytest.approx([0.0, 0.1, 0.2])
    with pytest.raises(Exception):
        parse_grid("0:1:0")


def test_bound_rows(capsys):
    code, out, _ = run(capsys, "bound", "--lam", "1", "--q", "0,0.5,1")
    assert code == 0
    body = [l for l in out.splitlines() if not l.startswith("#")]
    assert body[0] == "lambda,q,B,terms,trunc_error"
    rows = [l.split(",") for l in body[1:]]
    assert [float(r[2]) for r in rows][0] == 0.5 == float(rows[2][2])
    assert float(rows[1][2]) > 0.5


def test_header_records_command_and_seed(capsys):
    _, out, _ = run(capsys, "bound", "--q", "0.3", "--seed", "11")
    assert out.startswith("# arwlab ")
    assert "# command: bound" in out and "# seed: 11" in out
    assert "workers" not in out


def test_invalid_lambda_exit_2(capsys):
    code, _, err = run(capsys, "bound", "--lam", "0", "--q", "0.5")
    assert code == 2 and "lambda" in err


def test_zero_drift_exit_2(capsys):
    code, _, err = run(capsys, "estimate-f", "--jumps", "1@0.5;-1@0.5", "--trials", "10")
    assert code == 2 and "ZeroDrift" in err


def test_empty_mu_grid_exit_2(capsys):
    code, _, err = run(capsys, "phase", "--mu", "")
    assert code == 2 and "mu" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("# comment\nlam = 0.5\nq = 0.2\n")
    assert read_config(str(cfg)) == ["--lam", "0.5", "--q", "0.2"]
    _, out, _ = run(capsys, "bound", "--config", str(cfg))
    assert "\n0.5,0.2," in out
    _, out, _ = run(capsys, "bound", "--config", str(cfg), "--lam", "2")
    assert "\n2.0,0.2," in out


def test_estimate_f_exact_case(capsys):
    code, out, _ = run(capsys, "estimate-f", "--q", "1", "--lam", "1", "--trials", "4000", "--horizon", "100")
    row = out.splitlines()[-1].split(",")
    assert code == 0 and abs(float(row[4]) - 0.5) < 0.05


def test_outputs_reproducible(tmp_path, capsys):
    paths = []
    for i, w in enumerate((1, 2, 1)):
        p = tmp_path / f"ph{i}.csv"
        code, _, _ = run(capsys, "phase", "--mu", "0.3,0.7", "--L", "20,40", "--trials", "20",
                         "--f-trials", "500", "--f-horizon", "50", "--seed", "3", "--workers", str(w),
                         "--out", str(p))
        assert code == 0
        paths.append(p)
    texts = [p.read_bytes() for p in paths]
    assert texts[0] == texts[1] == texts[2]
    summaries = [p.with_suffix(".summary.json").read_bytes() for p in paths]
    assert summaries[0] == summaries[1] == summaries[2]
    js = json.loads(summaries[0])
    assert "header" in js and "crossing" in js


def test_trapezoid_command(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, _, _ = run(capsys, "trapezoid", "--L", "20", "--runs", "5", "--K", "2", "--out", str(out))
    assert code == 0
    summary = json.loads(out.with_suffix(".summary.json").read_text())
    block = summary["per_L"]["20"]
    assert block["identity_exact"] and block["confinement_violations"] == 0


def test_trapezoid_bad_geometry(capsys):
    code, _, err = run(capsys, "trapezoid", "--L", "5", "--K", "5", "--runs", "1")
    assert code == 2 and "K < L" in err


def test_verify_and_negative_control(capsys):
    code, out, _ = run(capsys, "verify", "--instances-per-cell", "3")
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(capsys, "verify", "--instances-per-cell", "3", "--corrupt-tapes")
    assert code == 1 and "FAIL" in out
