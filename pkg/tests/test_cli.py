import csv
import json

import pytest

from risregion.cli import csv_header, expand_schemes, run_cli


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_region_row_count(tmp_path):
    out = tmp_path / "region.csv"
    code = run_cli(["region", "--scenario", "C1", "--power-db", "10", "--schemes", "PR,IR",
                    "--alpha-points", "21", "--single-start", "--out", str(out)])
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["scheme", "alpha1", "alpha2", "r1", "r2", "converged", "iters"]
    assert len(rows) == 43
    assert {r[0] for r in rows[1:]} == {"PR", "IR"}
    assert all(r[5] in ("true", "false") and int(r[6]) >= 0 for r in rows[1:])


def test_region_with_ris_adds_ris_schemes(tmp_path):
    out = tmp_path / "ris.csv"
    code = run_cli(["region", "--scenario", "C3", "--ris", "--ris-elements", "2", "--schemes", "IR",
                    "--alpha-points", "2", "--single-start", "--out", str(out), "--traces", str(tmp_path / "tr")])
    assert code == 0
    labels = [r[0] for r in _rows(out)[1:]]
    assert labels == ["IR", "IR", "IR_IR", "IR_IR"]
    trace = (tmp_path / "tr" / "IR_IR_000.txt").read_text().splitlines()
    assert trace[0].startswith("# scheme IR_IR")
    vals = [float(v) for v in trace[1:]]
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))


def test_manifest_replay_is_bit_identical(tmp_path):
    first = tmp_path / "a.csv"
    args = ["--scenario", "C2", "--iqi", "--schemes", "PT,IR", "--alpha-points", "3"]
    assert run_cli(["region", *args, "--out", str(first)]) == 0
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["config"]["seed"] == manifest["seed"]
    assert set(manifest["versions"]) >= {"risregion", "numpy", "scipy", "python"}
    second = tmp_path / "b.csv"
    assert run_cli(["region", "--config", str(tmp_path / "a.manifest.json"), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    replay = json.loads((tmp_path / "b.manifest.json").read_text())
    assert replay["outputs"]["csv"]["sha256"] == manifest["outputs"]["csv"]["sha256"]


def test_single_point(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code = run_cli(["single-point", "--scenario", "C1", "--scheme", "PR", "--alpha", "0.5,0.5",
                    "--out", str(out), "--trace", str(tmp_path / "t.txt")])
    assert code == 0
    assert "objective 1.47417" in capsys.readouterr().out
    assert len(_rows(out)) == 2


def test_validate(capsys):
    assert run_cli(["validate", "--suite", "surrogates"]) == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "FAIL" not in text and "checks passed" in text


def test_fixtures(capsys):
    assert run_cli(["fixtures", "--name", "C1"]) == 0
    text = capsys.readouterr().out
    assert "-1.3992+0.0292i" in text and "+0.2353-0.1238i" in text
    assert run_cli(["fixtures", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["C1"][0][0][0] == [-1.3992, 0.0292]


@pytest.mark.parametrize("argv", [
    ["fixtures", "--name", "C9"],
    ["validate", "--suite", "nope"],
    ["single-point", "--scenario", "C1", "--alpha", "0.5"],
    ["single-point", "--scenario", "C1", "--scheme", "XX"],
    ["region", "--scenario", "C1", "--config", "x.yaml"],
])
def test_errors_give_nonzero_exit(argv, capsys):
    assert run_cli(argv) != 0
    assert "error" in capsys.readouterr().err


def test_helpers():
    assert csv_header(3) == ["scheme", "alpha1", "alpha2", "alpha3", "r1", "r2", "r3", "converged", "iters"]
    assert expand_schemes(["PR", "IR"], ris=True) == ["PR", "IR", "PR_IR", "IR_IR"]
    assert expand_schemes(["pr"], ris=False) == ["PR"]
