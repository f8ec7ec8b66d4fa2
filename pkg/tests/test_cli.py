import json
import math
import subprocess
import sys

import jsonschema
import pytest

from fhlaguerre import cli
from fhlaguerre.errors import DegenerateOrthogonality, ToleranceUnmet
from fhlaguerre.opoly import RecurrenceTable
from fhlaguerre.weight import MomentTable


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cache_args(tmp_path):
    return ["--cache-dir", str(tmp_path / "cache")]


def test_parse_ladder_and_grid():
    assert cli.parse_ladder("40:320:2") == [40, 80, 160, 320]
    assert cli.parse_ladder("10, 20,40") == [10, 20, 40]
    assert cli.parse_grid("-2:1:0.25")[:3] == [-2.0, -1.75, -1.5]
    assert len(cli.parse_grid("-2:1:0.25")) == 13
    assert cli.parse_grid("0,0.5") == [0.0, 0.5]
    for bad in ("40:320", "0:10:2", "10:20:1"):
        with pytest.raises(ValueError):
            cli.parse_ladder(bad)
    with pytest.raises(ValueError):
        cli.parse_grid("1:0:0.1")


def test_moments_factorials(capsys, cache_args):
    code, out, _ = run(["moments", "--alpha", "0", "--beta", "0", "--omega", "1", "--mu", "4",
                        "--order", "10", "--bits", "192", *cache_args], capsys)
    assert code == 0
    payload = json.loads(out)
    jsonschema.validate(payload, cli.load_schema("moment_table"))
    table = MomentTable.from_json(payload)
    for k, v in enumerate(table.values):
        assert abs(v / math.factorial(k) - 1) < 1e-50


def test_moments_closed_form_two_over_e(capsys, cache_args):
    code, out, _ = run(["moments", "--alpha", "0", "--beta", "0.5", "--omega", "1", "--mu", "1",
                        "--order", "0", "--format", "csv", *cache_args], capsys)
    assert code == 0
    header, row = out.splitlines()
    assert header == "k,re,im,err"
    assert float(row.split(",")[1]) == pytest.approx(2 / math.e, rel=1e-15)


def test_cached_output_is_byte_identical(tmp_path, capsys, cache_args):
    argv = ["recurrence", "--alpha", "0.3", "--beta", "0.25", "--omega", "0.8", "--n", "6", "--s", "0.5",
            "--N", "7", *cache_args]
    outs = []
    for name in ("fresh.json", "cached.json"):
        assert cli.main(argv + ["--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert cli.main(argv[:-2] + ["--no-cache", "--out", str(tmp_path / "nocache.json")]) == 0
    assert outs[0] == outs[1] == (tmp_path / "nocache.json").read_bytes()
    assert len(list((tmp_path / "cache").rglob("*.json"))) == 1
    payload = json.loads(outs[0])
    jsonschema.validate(payload, cli.load_schema("recurrence_table"))
    assert RecurrenceTable.from_json(payload).N == 7


def test_recurrence_both_routes(capsys, cache_args):
    code, out, _ = run(["recurrence", "--alpha", "0", "--beta", "0.5", "--omega", "0.5", "--omega-im", "0.5",
                        "--n", "5", "--s", "0", "--N", "5", "--route", "both", *cache_args], capsys)
    assert code == 0
    payload = json.loads(out)
    assert set(payload["tables"]) == {"hankel", "stieltjes"}
    assert payload["max_relative_discrepancy"] < 1e-50


def test_recurrence_csv(capsys, cache_args):
    code, out, _ = run(["recurrence", "--alpha", "0", "--beta", "0", "--omega", "1", "--n", "3", "--s", "0",
                        "--N", "3", "--format", "csv", *cache_args], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "k,a,b2,log_gamma"
    assert float(lines[1].split(",")[1]) == pytest.approx(1.0)
    assert float(lines[3].split(",")[2]) == pytest.approx(4.0)
    assert lines[4].split(",")[1] == ""


@pytest.mark.parametrize(
    "argv",
    [
        ["moments", "--alpha", "-1", "--beta", "0", "--mu", "1", "--order", "2"],
        ["moments", "--alpha", "0", "--beta", "-0.5", "--mu", "1", "--order", "2"],
        ["moments", "--alpha", "0", "--beta", "0", "--omega", "-0.5", "--mu", "1", "--order", "2"],
        ["moments", "--alpha", "0", "--beta", "0", "--order", "2"],
        ["fredholm", "--omega", "1.5", "--s-grid", "0"],
        ["extract", "--alpha", "0", "--beta", "0", "--s-grid", "0", "--ladder", "10,20"],
    ],
)
def test_domain_errors_exit_2(argv, capsys, cache_args):
    extra = cache_args if argv[0] != "fredholm" else []
    code, _, err = run(argv + extra, capsys)
    assert code == 2
    assert err.startswith("error:")


def test_precision_exhausted_exit_4(capsys, cache_args):
    code, _, err = run(["recurrence", "--alpha", "0", "--beta", "0", "--omega", "1", "--n", "80", "--s", "0",
                        "--N", "80", "--bits", "64", *cache_args], capsys)
    assert code == 4
    assert "error:" in err


def test_tolerance_unmet_exit_3(monkeypatch, capsys, cache_args):
    def fail(*args, **kwargs):
        raise ToleranceUnmet("panel budget exhausted", best=0, error=1)

    monkeypatch.setattr(cli, "moments", fail)
    code, _, _ = run(["moments", "--alpha", "0", "--beta", "0", "--mu", "1", "--order", "2", *cache_args], capsys)
    assert code == 3


def test_degenerate_exit_5(monkeypatch, capsys, cache_args):
    def fail(*args, **kwargs):
        raise DegenerateOrthogonality(3)

    monkeypatch.setattr(cli, "recurrence", fail)
    code, _, err = run(["recurrence", "--alpha", "0", "--beta", "0", "--omega", "0.5", "--omega-im", "1",
                        "--n", "3", "--s", "0", "--N", "3", *cache_args], capsys)
    assert code == 5
    assert "3" in err


def test_verify_report_schema(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--alpha", "0", "--beta", "0", "--omega", "0", "--s", "0",
                     "--ladder", "10,20,40", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, cli.load_schema("verify_report"))
    assert report["source"] == "fredholm"
    assert [r["n"] for r in report["rows"]] == [10, 20, 40]
    assert report["slopes"]["err_a"] < 0
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"version": "x"}, cli.load_schema("verify_report"))


def test_verify_rejects_z_near_segment(capsys):
    code, _, _ = run(["verify", "--alpha", "0", "--beta", "0", "--omega", "0", "--s", "0", "--ladder", "10,20",
                      "--z", "0.5+0.05j"], capsys)
    assert code == 2


def test_extract_with_fredholm_check(tmp_path, capsys, cache_args):
    out = tmp_path / "sample.json"
    code, _, err = run(["extract", "--alpha", "0", "--beta", "0", "--omega", "1", "--s-grid=-0.5:0.5:0.5",
                        "--ladder", "10,20,40", "--fredholm-check", "--out", str(out), *cache_args], capsys)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["fredholm_sigma"] == [0.0, 0.0, 0.0]
    jsonschema.validate({k: v for k, v in payload.items() if k != "fredholm_sigma"},
                        cli.load_schema("painleve_sample"))
    assert "max |u + dsigma/ds|" in err


def test_fredholm_command(capsys):
    code, out, _ = run(["fredholm", "--omega", "0", "--s-grid", "0,8"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "s,det,sigma,det_change_2m"
    s0 = lines[1].split(",")
    assert float(s0[1]) == pytest.approx(0.96937282835526, abs=1e-12)
    assert float(s0[3]) < 1e-10
    assert abs(float(lines[2].split(",")[2])) < 1e-6


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "fhlaguerre.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip()
