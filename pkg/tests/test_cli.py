import subprocess
import sys

import numpy as np
import pytest
from scipy.special import ndtri

from signgate.cli import main

MINIMAL_CONFIG = """
m = 60
replicates = 4
alpha_s = 0.1
seed = 11
procedures = ["BY", "LC"]

[effect.normal]
mean = 0.0
sd = 2.0
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def y_for_p(p):
    return ndtri(1.0 - np.asarray(p) / 2.0)


class TestInfer:
    def test_fixed_alpha_decisions(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "2.5\n-0.3\n-2.2\n")
        rc = main(["infer", "--input", path, "--procedure", "fixed-alpha", "--alpha", "0.05"])
        out, err = capsys.readouterr()
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "index,y,rejected,sign,p_value"
        assert lines[1].startswith("0,2.5,1,1,")
        assert lines[2].startswith("1,-0.29999999999999999,0,0,")
        assert lines[3].startswith("2,-2.2000000000000002,1,-1,")
        assert "procedure=fixed-alpha" in err
        assert "R=2" in err

    def test_lc_footer_reports_threshold(self, tmp_path, capsys):
        ys = "\n".join(str(v) for v in y_for_p([0.001, 0.2, 0.9]))
        path = write(tmp_path, "y.txt", ys + "\n")
        rc = main(["infer", "--input", path, "--procedure", "lc", "--alpha-s", "0.1"])
        out, err = capsys.readouterr()
        assert rc == 0
        assert f"alpha_chosen={format(0.2 / 3, '.17g')}" in err
        assert "procedure=lc" in err and "R=1" in err
        rejected = [line.split(",")[2] for line in out.splitlines()[1:]]
        assert rejected == ["1", "0", "0"]

    def test_tce_degenerate_fit_warns(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        ys = "\n".join(str(v) for v in 0.7 * rng.standard_normal(200))
        path = write(tmp_path, "y.txt", ys + "\n")
        rc = main(["infer", "--input", path, "--procedure", "tce"])
        _, err = capsys.readouterr()
        assert rc == 0
        assert "warning:" in err and "degenerate" in err
        assert "R=0" in err

    def test_alpha_rejected_for_adaptive_procedures(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "1.0\n")
        rc = main(["infer", "--input", path, "--procedure", "lc", "--alpha", "0.1"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "apply only to procedure fixed-alpha" in err

    def test_fixed_alpha_requires_alpha(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "1.0\n")
        rc = main(["infer", "--input", path, "--procedure", "fixed-alpha"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "requires --alpha" in err

    def test_output_file(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "2.5\n")
        dest = tmp_path / "dec.csv"
        rc = main([
            "infer", "--input", path, "--procedure", "by", "--output", str(dest),
        ])
        out, _ = capsys.readouterr()
        assert rc == 0
        assert out == ""
        assert dest.read_text().startswith("index,y,rejected,sign,p_value\n")


class TestInferCsvInput:
    def test_numeric_column_index(self, tmp_path, capsys):
        path = write(tmp_path, "d.csv", "3.0,9\n-0.5,8\n")
        rc = main(["infer", "--input", path, "--csv", "0", "--procedure", "by"])
        out, _ = capsys.readouterr()
        assert rc == 0
        assert out.splitlines()[1].startswith("0,3,")
        assert len(out.splitlines()) == 3

    def test_index_skips_header_row(self, tmp_path, capsys):
        path = write(tmp_path, "d.csv", "y,tag\n1.5,a\n")
        rc = main(["infer", "--input", path, "--csv", "0", "--procedure", "by"])
        out, _ = capsys.readouterr()
        assert rc == 0
        assert len(out.splitlines()) == 2  # header plus one data row

    def test_named_column(self, tmp_path, capsys):
        path = write(tmp_path, "d.csv", "y_obs,extra\n2.5,1\n-2.5,2\n")
        rc = main(["infer", "--input", path, "--csv", "y_obs", "--procedure", "by"])
        out, _ = capsys.readouterr()
        assert rc == 0
        signs = [line.split(",")[3] for line in out.splitlines()[1:]]
        assert signs == ["1", "-1"]

    def test_unknown_column_name(self, tmp_path, capsys):
        path = write(tmp_path, "d.csv", "y_obs\n2.5\n")
        rc = main(["infer", "--input", path, "--csv", "nope", "--procedure", "by"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "no column named 'nope'" in err


class TestInferInputErrors:
    def test_empty_file(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "\n\n")
        rc = main(["infer", "--input", path, "--procedure", "by"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "input is empty" in err

    def test_missing_file(self, tmp_path, capsys):
        rc = main(["infer", "--input", str(tmp_path / "gone.txt"), "--procedure", "by"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "cannot read input" in err

    def test_bad_token_names_row(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "1.0\nfoo\n")
        rc = main(["infer", "--input", path, "--procedure", "by"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "row 2" in err and "'foo'" in err

    def test_non_finite_rejected(self, tmp_path, capsys):
        path = write(tmp_path, "y.txt", "inf\n")
        rc = main(["infer", "--input", path, "--procedure", "by"])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "non-finite" in err

    def test_unknown_procedure_is_usage_error(self, tmp_path):
        path = write(tmp_path, "y.txt", "1.0\n")
        with pytest.raises(SystemExit) as exc:
            main(["infer", "--input", path, "--procedure", "bonferroni"])
        assert exc.value.code == 2


class TestSimulate:
    def test_report_shape_and_determinism(self, tmp_path, capsys):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        rc = main(["simulate", "--scenario", cfg])
        first, _ = capsys.readouterr()
        assert rc == 0
        lines = first.splitlines()
        assert lines[0] == "scenario_id,procedure,mean_sep,se_sep,mean_signs,se_signs,replicates"
        assert len(lines) == 3
        assert lines[1].startswith("design,BY,") and lines[2].startswith("design,LC,")
        assert all(line.endswith(",4") for line in lines[1:])
        main(["simulate", "--scenario", cfg])
        second, _ = capsys.readouterr()
        assert second == first

    def test_seed_flag_changes_results(self, tmp_path, capsys):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        main(["simulate", "--scenario", cfg])
        base, _ = capsys.readouterr()
        main(["simulate", "--scenario", cfg, "--seed", "5"])
        reseeded, _ = capsys.readouterr()
        assert reseeded != base

    def test_env_seed_and_flag_precedence(self, tmp_path, capsys, monkeypatch):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        monkeypatch.setenv("SIGNGATE_SEED", "5")
        main(["simulate", "--scenario", cfg])
        via_env, _ = capsys.readouterr()
        monkeypatch.delenv("SIGNGATE_SEED")
        main(["simulate", "--scenario", cfg, "--seed", "5"])
        via_flag, _ = capsys.readouterr()
        assert via_env == via_flag
        monkeypatch.setenv("SIGNGATE_SEED", "7")
        main(["simulate", "--scenario", cfg, "--seed", "5"])
        flag_beats_env, _ = capsys.readouterr()
        assert flag_beats_env == via_flag

    def test_bad_env_seed(self, tmp_path, capsys, monkeypatch):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        monkeypatch.setenv("SIGNGATE_SEED", "not-a-number")
        rc = main(["simulate", "--scenario", cfg])
        _, err = capsys.readouterr()
        assert rc == 2
        assert "SIGNGATE_SEED" in err

    def test_flag_validation(self, tmp_path, capsys):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        assert main(["simulate", "--scenario", cfg, "--workers", "0"]) == 2
        assert main(["simulate", "--scenario", cfg, "--replicates", "0"]) == 2
        capsys.readouterr()

    def test_packaged_sweep(self, capsys):
        from importlib import resources

        cfg = str(resources.files("signgate") / "scenarios" / "figure3_q05.toml")
        rc = main(["simulate", "--scenario", cfg, "--replicates", "2"])
        out, _ = capsys.readouterr()
        assert rc == 0
        lines = out.splitlines()
        assert len(lines) == 1 + 5 * 4  # five tau values, four procedures
        assert all(":tau=" in line for line in lines[1:])

    def test_plot_written(self, tmp_path, capsys):
        cfg = write(tmp_path, "design.toml", MINIMAL_CONFIG)
        svg = tmp_path / "report.svg"
        rc = main(["simulate", "--scenario", cfg, "--plot", str(svg)])
        capsys.readouterr()
        assert rc == 0
        head = svg.read_text()[:200]
        assert "<svg" in head or "<?xml" in head


class TestTable1:
    def test_reference_rows(self, capsys):
        rc = main(["table1"])
        out, err = capsys.readouterr()
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "row,s,lower,upper,scaled_lower,scaled_upper,mser_percent,msdr"
        rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
        assert set(rows) == {"s_U", "s_D", "s_E"}

        s_u = rows["s_U"]
        assert float(s_u[1]) == 0.5
        assert float(s_u[6]) == pytest.approx(3.01, abs=0.1)
        assert float(s_u[7]) == pytest.approx(0.189, abs=0.003)

        s_d = rows["s_D"]
        assert float(s_d[1]) == pytest.approx(0.683, abs=0.02)
        assert float(s_d[7]) == pytest.approx(0.193, abs=0.003)

        s_e = rows["s_E"]
        assert float(s_e[1]) == pytest.approx(0.829, abs=0.02)
        assert float(s_e[6]) == pytest.approx(2.71, abs=0.1)

        assert "effect-scale convention: 2" in err
        assert "warning" not in err

    def test_scaled_endpoints_double_z_units(self, capsys):
        main(["table1"])
        out, _ = capsys.readouterr()
        row = out.splitlines()[1].split(",")
        assert float(row[4]) == pytest.approx(2.0 * float(row[2]), rel=1e-15)
        assert float(row[5]) == pytest.approx(2.0 * float(row[3]), rel=1e-15)


def test_console_script_and_module_entry(tmp_path):
    path = tmp_path / "y.txt"
    path.write_text("2.5\n")
    script = subprocess.run(
        ["signgate", "infer", "--input", str(path), "--procedure", "by"],
        capture_output=True, text=True,
    )
    assert script.returncode == 0
    module = subprocess.run(
        [sys.executable, "-m", "signgate", "infer", "--input", str(path), "--procedure", "by"],
        capture_output=True, text=True,
    )
    assert module.returncode == 0
    assert module.stdout == script.stdout
