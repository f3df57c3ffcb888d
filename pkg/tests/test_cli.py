import json

import pytest
from hypothesis import given, strategies as st

from scatter_ab.cli import ConfigError, format_complex, main, parse_complex


@pytest.mark.parametrize("text,value", [("2+1i", 2 + 1j), ("0-3.5i", -3.5j), ("-1e-1+2i", -0.1 + 2j),
                                        ("4+i", 4 + 1j)])
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("text", ["2", "2i", "2 + 1i", "1+2j", ""])
def test_parse_complex_rejects(text):
    with pytest.raises(ConfigError):
        parse_complex(text)


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_complex_round_trip(a, b):
    k = complex(a / 4, b / 4)
    assert parse_complex(format_complex(k)) == k


def test_verify_identity_pass(tmp_path, capsys):
    rc = main(["verify-identity", "--n", "32,64", "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "identity.json").read_text())
    assert set(data) >= {"residuals", "orders"}
    assert len(data["residuals"]) == 2 and data["passed"]


def test_verify_identity_quantitative_failure(tmp_path):
    assert main(["verify-identity", "--n", "32,64", "--tol", "1e-6", "--out", str(tmp_path)]) == 1


def test_zero_k_is_usage_error(tmp_path, capsys):
    assert main(["verify-identity", "--k", "0+0i", "--n", "16,32", "--out", str(tmp_path)]) == 2
    assert "1/k" in capsys.readouterr().err


def test_small_n_is_usage_error(tmp_path, capsys):
    assert main(["verify-identity", "--n", "4", "--out", str(tmp_path)]) == 2
    assert ">= 8" in capsys.readouterr().err


def test_oscillation_guard_reports_kh(tmp_path, capsys):
    assert main(["sweep-decay", "--n", "64", "--k-moduli", "2,4,64", "--out", str(tmp_path)]) == 2
    assert "|k|*h = 4" in capsys.readouterr().err


def test_single_k_sweep_is_usage_error(tmp_path, capsys):
    assert main(["sweep-decay", "--k", "2+2i", "--n", "64", "--out", str(tmp_path)]) == 2
    assert "need >= 3 points" in capsys.readouterr().err


def test_zero_input_sweep_is_degenerate(tmp_path):
    rc = main(["sweep-decay", "--u", "zero", "--n", "64", "--k-moduli", "2,4,8", "--out", str(tmp_path)])
    assert rc == 2
    assert json.loads((tmp_path / "sweep.json").read_text())["degenerate"] is True


def test_sweep_outputs_are_deterministic(tmp_path):
    args = ["sweep-decay", "--n", "128", "--k-moduli", "2,4,8", "--slope-min", "-1.5",
            "--slope-max", "-0.3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("sweep.csv", "sweep.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "sweep.csv").read_text().splitlines()[0]
    assert header == "k_re,k_im,p,norm_u,norm_ABu,ratio"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": [16, 32], "k": "1+1i", "tol": 1e-9}))
    assert main(["verify-identity", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert main(["verify-identity", "--config", str(cfg), "--tol", "0.05", "--out", str(tmp_path)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert main(["verify-identity", "--config", str(bad)]) == 2


def test_check_inequalities_small(tmp_path):
    rc = main(["check-inequalities", "--n", "32", "--trials", "4", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "constituents.csv").read_text().splitlines()
    assert lines[0] == "operator,p_in,p_out_kind,n,seed,ratio"
    assert len(lines) == 1 + 2 * 6


def test_benchmark(tmp_path):
    assert main(["benchmark", "--n", "16", "--kernels", "riesz,cauchy", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "benchmark.csv").read_text().splitlines()
    assert lines[0] == "kernel,n,path,seconds" and len(lines) == 5


def test_unknown_domain(tmp_path, capsys):
    assert main(["verify-identity", "--domain", "nowhere", "--out", str(tmp_path)]) == 2
