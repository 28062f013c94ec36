import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from prodgap import cli


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr().out
    return code, out


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestGapCommand:
    def test_zero_interval_row(self, capsys):
        code, out = run_cli(["gap", "--nu", "0", "--s-max", "0"], capsys)
        header, rows = parse_csv(out)
        assert code == 0
        assert header == ["s", "F_fredholm", "F_ode", "abs_diff"]
        assert rows == [["0", "1", "1", "0"]]

    def test_row_count_and_agreement(self, capsys):
        code, out = run_cli(
            ["gap", "--nu", "0", "--s-max", "5", "--points", "12"], capsys
        )
        header, rows = parse_csv(out)
        assert code == 0
        assert len(rows) == 12
        diffs = [float(r[3]) for r in rows]
        assert max(diffs) < 1e-6
        f = [float(r[1]) for r in rows]
        assert all(a > b for a, b in zip(f, f[1:]))

    def test_17_digit_serialization(self, capsys):
        _, out = run_cli(["gap", "--nu", "0", "--s-max", "1", "--points", "3"], capsys)
        _, rows = parse_csv(out)
        value = rows[1][1]
        assert float(value) == pytest.approx(np.exp(-0.5), abs=1e-10)
        assert len(value.replace(".", "").replace("-", "").lstrip("0")) >= 16


class TestKernelCommand:
    def test_grid_and_methods_agree(self, capsys):
        code, out = run_cli(
            ["kernel", "--nu", "1,2", "--grid-max", "4", "--points", "3"], capsys
        )
        header, rows = parse_csv(out)
        assert code == 0
        assert header == ["x", "y", "K_bilinear", "K_integral", "abs_diff"]
        assert len(rows) == 9
        assert max(float(r[4]) for r in rows) < 1e-8

    def test_json_format(self, capsys):
        code, out = run_cli(
            ["kernel", "--nu", "0", "--grid-max", "2", "--points", "2",
             "--format", "json"],
            capsys,
        )
        payload = json.loads(out)
        assert code == 0
        assert payload["metadata"]["factors"] == 1
        assert set(payload["columns"]) == {"x", "y", "K_bilinear", "K_integral",
                                           "abs_diff"}
        assert len(payload["columns"]["x"]) == 4


class TestOdeCommand:
    def test_columns(self, capsys):
        code, out = run_cli(
            ["ode", "--nu", "1,2", "--s-max", "2", "--points", "4"], capsys
        )
        header, rows = parse_csv(out)
        assert code == 0
        assert header[0] == "s" and header[-1] == "F"
        assert "x0_re" in header and "eta2" in header
        assert len(rows) == 4
        # gap column stays in (0, 1]
        fvals = [float(r[-1]) for r in rows]
        assert all(0 < v <= 1 for v in fvals)


class TestMcCommand:
    def test_schema_and_determinism(self, capsys, tmp_path):
        args = ["mc", "--nu", "0", "--n0", "1", "--trials", "500", "--seed", "9",
                "--s", "0.5,1.5"]
        code, out1 = run_cli(args, capsys)
        assert code == 0
        code, out2 = run_cli(args, capsys)
        assert out1 == out2
        header, rows = parse_csv(out1)
        assert header == ["s", "empirical", "stderr", "F_reference"]
        assert len(rows) == 2
        est = float(rows[0][1])
        assert abs(est - np.exp(-0.5)) < 0.1

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "mc.csv"
        code, _ = run_cli(
            ["mc", "--nu", "0", "--n0", "1", "--trials", "200", "--seed", "3",
             "--s", "1.0", "--out", str(path)],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(path.read_text())
        assert len(rows) == 1


class TestVerifyCommand:
    def test_verify_passes_and_writes_report(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        code, out = run_cli(
            ["verify", "--nu", "0", "--seed", "4", "--trials", "4000",
             "--out", str(path)],
            capsys,
        )
        assert code == 0
        assert out.count("[PASS]") == 12
        assert "[FAIL]" not in out
        payload = json.loads(path.read_text())
        assert all(chk["passed"] for chk in payload["checks"])


class TestUsageErrors:
    def test_missing_nu_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["gap"])
        assert exc.value.code == 2

    def test_bad_nu_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["gap", "--nu", "spam"])
        assert exc.value.code == 2

    def test_numerical_failure_exits_1(self, capsys):
        # psi diverges at the origin for repeated zero exponents and the ODE
        # route refuses to start without the bootstrap flag
        code = cli.main(["gap", "--nu", "0,0", "--s-max", "1", "--points", "2"])
        err = capsys.readouterr().err
        assert code == 1
        assert "bootstrap" in err

    def test_bootstrap_flag_recovers(self, capsys):
        code, out = run_cli(
            ["gap", "--nu", "0,0", "--s-max", "1", "--points", "3", "--bootstrap"],
            capsys,
        )
        assert code == 0
        _, rows = parse_csv(out)
        assert max(float(r[3]) for r in rows) < 1e-4


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "prodgap.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "prodgap" in proc.stdout
