import json

import pytest

from csrk import __version__
from csrk.cli import main
from csrk.tableau import builtin_scheme, tableau_to_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def body_lines(text):
    """Output body: everything except comment/header lines."""
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


class TestSchemes:
    def test_lists_all(self, capsys):
        code, out, _ = run(capsys, "schemes")
        assert code == 0
        rows = body_lines(out)
        assert rows[0] == "name,stages,p_deterministic,p_stochastic"
        assert len(rows) == 8
        assert rows[1].startswith("EULER_LINEAR,1,1")

    def test_header_has_version_and_config(self, capsys):
        _, out, _ = run(capsys, "schemes")
        assert out.startswith(f"# csrk {__version__}")
        assert '"command": "schemes"' in out


class TestCheck:
    def test_pass_exit_zero(self, capsys):
        code, out, _ = run(capsys, "check", "--scheme", "CRDI2WM")
        assert code == 0
        assert "# overall = pass" in out
        rows = body_lines(out)
        assert rows[0] == "family,index,residual,worst_theta,pass"
        assert all(r.endswith(",pass") for r in rows[1:])

    def test_failing_declared_condition_exits_nonzero(self, capsys, tmp_path):
        doc = json.loads(tableau_to_json(builtin_scheme("EULER_OPT")))
        doc["meta"]["conditions"].append("order2_at_one:13")
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(doc))
        code, out, _ = run(capsys, "check", "--scheme-file", str(f))
        assert code == 1
        assert "# overall = FAIL" in out
        assert "order2_at_one,13,1," in out

    def test_scheme_file_round_trip(self, capsys, tmp_path):
        f = tmp_path / "crdi3.json"
        f.write_text(tableau_to_json(builtin_scheme("CRDI3WM")))
        code, _, _ = run(capsys, "check", "--scheme-file", str(f))
        assert code == 0

    def test_missing_scheme_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as ei:
            main(["check"])
        assert ei.value.code == 2

    def test_unknown_scheme(self, capsys):
        code, _, err = run(capsys, "check", "--scheme", "RK4")
        assert code == 2
        assert "RK4" in err


class TestSimulate:
    def test_rows_cover_grid(self, capsys):
        code, out, _ = run(
            capsys, "simulate", "--scheme", "CRDI2WM", "--problem", "linear",
            "--h", "0.5", "--seed", "3", "--dense-per-step", "1",
        )
        assert code == 0
        rows = body_lines(out)
        assert rows[0] == "t,theta,y1"
        # 4 nodes + 4 dense + final node
        assert len(rows) == 1 + 9

    def test_deterministic(self, capsys):
        _, a, _ = run(capsys, "simulate", "--scheme", "CRDI3WM", "--problem",
                      "linear", "--h", "0.25", "--seed", "1")
        _, b, _ = run(capsys, "simulate", "--scheme", "CRDI3WM", "--problem",
                      "linear", "--h", "0.25", "--seed", "1")
        assert a == b


class TestErrorTableAndConverge:
    ARGS = (
        "--scheme", "CRDI2WM", "--problem", "linear", "--f", "x",
        "--t-eval", "2.0", "--h-list", "0.5,0.25", "--M", "4000",
        "--seed", "11",
    )

    def test_error_table_columns(self, capsys):
        code, out, _ = run(capsys, "error-table", *self.ARGS)
        assert code == 0
        rows = body_lines(out)
        assert rows[0] == "h,mu,sigma2_mu,ci_low,ci_high"
        assert len(rows) == 3
        assert "# reference_provenance = paper_stated" in out

    def test_converge_appends_slope(self, capsys):
        code, out, _ = run(capsys, "converge", *self.ARGS)
        assert code == 0
        assert "# slope = " in out

    def test_bodies_bit_identical_across_threads(self, capsys):
        _, a, _ = run(capsys, "converge", *self.ARGS, "--threads", "1")
        _, b, _ = run(capsys, "converge", *self.ARGS, "--threads", "4")
        assert body_lines(a) == body_lines(b)

    def test_non_divisible_h_rejected(self, capsys):
        code, _, err = run(
            capsys, "error-table", "--scheme", "CRDI2WM", "--problem",
            "linear", "--t-eval", "2.0", "--h-list", "0.3", "--M", "100",
        )
        assert code == 2
        assert "allow_shortened" in err

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "error-table", *self.ARGS,
                           "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["columns"] == ["h", "mu", "sigma2_mu", "ci_low", "ci_high"]
        assert len(doc["rows"]) == 2
        assert doc["config"]["scheme"] == "CRDI2WM"

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "table.csv"
        code, out, _ = run(capsys, "error-table", *self.ARGS,
                           "--output", str(target))
        assert code == 0
        assert out == ""
        assert "h,mu,sigma2_mu" in target.read_text()


class TestDense:
    def test_profile(self, capsys):
        code, out, _ = run(
            capsys, "dense", "--scheme", "CRDI3WM", "--problem", "linear",
            "--h", "0.5", "--theta-list", "0.25,0.75", "--M", "2000",
            "--seed", "0",
        )
        assert code == 0
        rows = body_lines(out)
        assert rows[0] == "t,theta,mu,sigma2_mu,ci_low,ci_high"
        assert len(rows) == 1 + 4 * 2


class TestExactCommands:
    def test_local_order(self, capsys):
        code, out, _ = run(
            capsys, "local-order", "--scheme", "CRDI2WM", "--problem",
            "linear", "--f", "x2", "--h-list", "0.125,0.0625,0.03125",
        )
        assert code == 0
        assert "# slope = " in out
        slope = float(out.rsplit("# slope = ", 1)[1].split()[0])
        assert slope == pytest.approx(3.0, abs=0.3)

    def test_exact_order(self, capsys):
        code, out, _ = run(
            capsys, "exact-order", "--scheme", "CRDI3WM", "--problem",
            "linear", "--f", "x2", "--N-list", "4,8,16",
            "--outcome-cap", "50000000",
        )
        assert code == 0
        rows = body_lines(out)
        assert rows[0] == "N,h,error"
        assert len(rows) == 4
        slope = float(out.rsplit("# slope = ", 1)[1].split()[0])
        assert slope > 2.0

    def test_capacity_error_reported(self, capsys):
        code, _, err = run(
            capsys, "exact-order", "--scheme", "CRDI2WM", "--problem",
            "system2d", "--f", "x2", "--N-list", "16",
        )
        assert code == 2
        assert "cap" in err
