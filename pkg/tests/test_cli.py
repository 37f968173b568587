import io
import json
import math

import pytest

from collar_bergman import audit
from collar_bergman.cli import SweepConfig, UsageError, run_command
from collar_bergman.collar import CollarParams, cut_tail_check
from collar_bergman.punctured import y_norm_exact, y_norm_quad


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_norms_punctured_row():
    code, out, _ = run(["norms", "--model", "punctured", "--k", "2", "--a", "1"])
    assert code == 0
    (row,) = csv_rows(out)
    assert row["model"] == "punctured" and row["k"] == "2" and row["a"] == "1"
    assert float(row["norm_reference_logmag"]) == pytest.approx(math.log(12 * math.pi), rel=1e-15)
    assert float(row["norm_reference_logmag"]) == pytest.approx(3.62964, abs=1e-5)
    assert row["match"] == "true"
    # thin adapter: the printed numbers are the library values
    assert float(row["norm_quad_logmag"]) == y_norm_quad(2, 1).logmag
    assert float(row["norm_reference_logmag"]) == y_norm_exact(2, 1).logmag


def test_cut_tail_row():
    code, out, err = run(["cut-tail", "--epsilon", "1e-3", "--k", "3"])
    assert code == 0 and err == ""
    (row,) = csv_rows(out)
    assert row["pass"] == "true"
    assert float(row["bound_logmag"]) == pytest.approx(-1.902, abs=2e-3)
    rep = cut_tail_check(CollarParams(1e-3, 3))
    assert float(row["density_sup_logmag"]) == rep.density_sup.logmag


def test_failed_audit_exit_code_and_record():
    code, out, err = run(["cut-tail", "--epsilon", "1e-3", "--k", "4"])
    assert code == 1
    rec = json.loads(err.strip().split("\n")[0])
    assert rec["k"] == 4 and rec["density_sup_logmag"] > rec["bound_logmag"]
    code, out, _ = run(["cut-tail", "--epsilon", "1e-3", "--k", "4", "--format", "json"])
    assert code == 1
    assert json.loads(out)["failures"][0]["epsilon"] == 1e-3


@pytest.mark.parametrize("argv", [
    ["norms", "--k", "x"],
    ["norms", "--a", "3..1"],
    ["norms", "--model", "punctured", "--a", "0..2"],
    ["frobnicate"],
    [],
    ["kernel", "--model", "embedding"],
    ["norms", "--rel-tol", "0"],
    ["cut-tail", "--epsilon", "0.5"],
    ["bubble", "--samples", "2"],
    ["norms", "--format", "xml"],
])
def test_usage_errors(argv):
    code, _, err = run(argv)
    assert code == 2
    assert "usage" in err


def test_negative_a_range():
    code, out, _ = run(["norms", "--model", "collar", "--epsilon", "1e-2", "--k", "2", "--a", "-2..2"])
    assert code == 0
    rows = csv_rows(out)
    assert [r["a"] for r in rows] == ["-2", "-1", "0", "1", "2"]
    assert all(r["match"] == "true" for r in rows)


def test_sweep_config_validation():
    with pytest.raises(UsageError):
        SweepConfig(epsilon_list=())
    with pytest.raises(UsageError):
        SweepConfig(model="disk")
    assert SweepConfig().to_json()["a_range"] == [1, 3]


@pytest.mark.parametrize("argv", [
    ["laplace-audit"],
    ["laplace-audit", "--model", "collar", "--epsilon", "1e-3", "--k", "3", "--a", "-1..2"],
    ["kernel", "--model", "punctured", "--k", "2", "--samples", "5"],
    ["kernel", "--samples", "5"],
    ["collar-sweep"],
    ["bubble", "--samples", "5", "--epsilon", "1e-2,1e-3"],
])
def test_json_roundtrip_and_determinism(argv):
    code1, a, _ = run(argv + ["--format", "json"])
    code2, b, _ = run(argv + ["--format", "json", "--jobs", "3"])
    assert code1 == code2 == 0
    assert a == b
    doc = json.loads(a)
    assert set(doc) == {"config", "rows", "failures"}
    assert json.dumps(doc, indent=2, allow_nan=False) + "\n" == a


def test_csv_header_always_present():
    _, out, _ = run(["collar-sweep", "--epsilon", "1e-3", "--a", "1"])
    lines = out.split("\n")
    assert lines[0].startswith("model,epsilon,k,a,")
    assert out.endswith("\n")


def test_large_values_have_no_decimal():
    code, out, _ = run(["collar-sweep", "--epsilon", "1e-4", "--a", "1", "--format", "json"])
    row = json.loads(out)["rows"][0]
    assert row["norm_a"]["sign"] == 1
    assert "decimal" not in row["norm_a"]
    code, out, _ = run(["collar-sweep", "--epsilon", "1e-4", "--a", "1"])
    assert csv_rows(out)[0]["norm_a_decimal"] == ""


def test_out_file(tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(["norms", "--out", str(target)])
    assert code == 0 and out == ""
    assert target.read_text().startswith("model,")


def test_report_all_matches_audits():
    code, out, err = run(["report-all", "--format", "json"])
    doc = json.loads(out)
    results = audit.run_all()
    assert code == (0 if all(r.passed for r in results) else 1)
    crits = sorted({r["criterion"] for r in doc["rows"]})
    assert crits == list(range(1, 11))
    failed = {f["criterion"] for f in doc["failures"]}
    assert failed == {r.number for r in results if not r.passed}
