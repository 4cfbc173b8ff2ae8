import numpy as np
import pytest

from sigmaqc import tables
from sigmaqc.cases import make_case
from sigmaqc.cli import load_config, main

LAMINATE = """
[case]
name = laminate
a1 = 2
a2 = 0.5

[grid]
sizes = 32

[checks]
d_sigma_const = 0.02
d_sigma_oracle = 0.02
area_identity = 1e-6

[output]
fields = d_sigma, u1
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_passes_and_writes(tmp_path):
    cfg = write(tmp_path, LAMINATE)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    report = (tmp_path / "o" / "report.txt").read_text()
    assert "dilatation.mean_d_sigma = 1.025" in report
    assert "result = pass" in report
    assert (tmp_path / "o" / "d_sigma_32.csv").exists() and (tmp_path / "o" / "u1_32.csv").exists()


def test_report_deterministic(tmp_path):
    cfg = write(tmp_path, LAMINATE.replace("sizes = 32", "sizes = 16, 32"))
    main(["run", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()


def test_zero_tolerance_on_noisy_check(tmp_path, capsys):
    cfg = write(tmp_path, "[case]\nname = identity\ntopology = dirichlet\n[grid]\nsizes = 16\n"
                          "[checks]\nsolve_residual = 0\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "FAILED solve_residual" in capsys.readouterr().out
    assert "result = fail" in (tmp_path / "o" / "report.txt").read_text()


def test_not_applicable_check_fails(tmp_path):
    cfg = write(tmp_path, "[case]\nname = kneser_rado_convex\n[grid]\nsizes = 16\n"
                          "[checks]\narea_identity = 1e-6\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize("text", [
    "[case]\nname = no_such_case\n",
    "[case]\nname = laminate\n[grid]\nsizes = 64, 32\n",
    "[case]\nname = laminate\n[checks]\nmade_up = 1\n",
    "[case]\nname = laminate\n[checks]\nharnack = -1\n",
    "[case]\nname = laminate\na1 = abc\n",
    "[case]\nname = laminate\na1 = -2\n[grid]\nsizes = 8\n",
    "not an ini file",
])
def test_config_errors_exit_2(tmp_path, text):
    cfg = write(tmp_path, text)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cases_lists_registry(capsys):
    assert main(["cases"]) == 0
    out = capsys.readouterr().out
    assert "laminate" in out and "kneser_rado_convex" in out


def test_export(tmp_path):
    cfg = write(tmp_path, LAMINATE)
    assert main(["export", "--config", cfg, "--field", "mu_nu", "--out", str(tmp_path / "e")]) == 0
    text = (tmp_path / "e" / "mu_nu_32.csv").read_text()
    assert text.startswith("cx,cy,mu_re,mu_im,nu_re,nu_im\n")
    assert main(["export", "--config", cfg, "--field", "nope", "--out", str(tmp_path / "e")]) == 2


def test_sigma_table_config(tmp_path):
    case = make_case("kneser_rado_convex")
    g = case.grid(16)
    tables.sigma_table(g, case.sigma_field(g).values, tmp_path / "sigma.csv")
    cfg = write(tmp_path, "[case]\nname = kneser_rado_convex\nsigma_table = sigma.csv\n"
                          "[grid]\nsizes = 16\n[checks]\nsolve_residual = 1e-10\n")
    assert load_config(cfg).sigma_table == tmp_path / "sigma.csv"
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "E = " in (tmp_path / "o" / "report.txt").read_text()
