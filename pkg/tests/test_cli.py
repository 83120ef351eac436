import json

import pytest

from quantding.cli import ConfigError, RunConfig, load_config, main, parse_config_text
from quantding.reporting import Check, write_report


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out), "--threads", "2"])
    return code, out


def test_config_defaults(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# round sphere\nk=8\npotential=0   # the round metric\n\n")
    cfg = load_config(cfg_file, command="rho")
    assert cfg.k == 8
    assert cfg.grid == (64, 128)
    assert cfg.potential == "0"


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="colour"):
        parse_config_text("colour=blue")


def test_config_rejects_malformed_values():
    with pytest.raises(ConfigError, match="grid"):
        parse_config_text("grid=64")
    with pytest.raises(ConfigError, match="tol"):
        parse_config_text("tol=small")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("k 8")


def test_negative_k_exits_with_config_error(tmp_path, capsys):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("k=-1\n")
    code, _ = run(tmp_path, "rho", "--config", str(cfg_file))
    assert code == 2
    assert "k:" in capsys.readouterr().err


def test_bad_expression_exits_with_config_error(tmp_path):
    assert run(tmp_path, "rho", "--potential", "x3 +")[0] == 2
    assert run(tmp_path, "rho", "--grid", "1,8")[0] == 2


def test_numerical_failure_exit_code(tmp_path):
    code, _ = run(tmp_path, "rho", "--k", "2", "--potential=-3*x3^2", "--grid", "16,32")
    assert code == 3


def test_rho_reports_constant(tmp_path):
    code, out = run(tmp_path, "rho", "--k", "8")
    assert code == 0
    report = json.loads((out / "rho.json").read_text())
    assert report["outputs"]["min"] == pytest.approx(8.5, abs=1e-10)
    assert report["outputs"]["max"] == pytest.approx(8.5, abs=1e-10)
    assert all(c["pass"] for c in report["checks"])
    assert report["threads"] == 2
    assert report["backend"] in ("compiled", "python")


def test_spectrum_csv_and_kernel(tmp_path):
    code, out = run(tmp_path, "spectrum", "--k", "4")
    assert code == 0
    lines = (out / "spectrum.csv").read_bytes().split(b"\r\n")
    assert lines[0] == b"k,index,eigenvalue"
    assert len([l for l in lines[1:] if l]) == 81
    report = json.loads((out / "spectrum.json").read_text())
    assert report["outputs"]["kernel_dimension"] == 4


def test_converge_command(tmp_path):
    code, out = run(tmp_path, "converge", "--f", "x3^2", "--klist", "4,8,16,32")
    assert code == 0
    report = json.loads((out / "converge.json").read_text())
    assert report["outputs"]["limit"] == pytest.approx(8 / 45, abs=1e-12)


def test_output_is_deterministic(tmp_path):
    a = run(tmp_path / "a", "balance", "--k", "3", "--potential", "0.3*x3")
    b = run(tmp_path / "b", "balance", "--k", "3", "--potential", "0.3*x3")
    assert a[0] == b[0] == 0
    assert (a[1] / "balance.csv").read_bytes() == (b[1] / "balance.csv").read_bytes()
    assert (a[1] / "balance-form.json").read_bytes() == (b[1] / "balance-form.json").read_bytes()


def test_failed_checks_exit_code(tmp_path):
    code, _ = run(tmp_path, "balance", "--k", "3", "--potential", "0.3*x3", "--max-iter", "2")
    assert code == 4


@pytest.mark.parametrize(
    "args",
    [
        ("gram", "--k", "3"),
        ("ding", "--potential", "0.3*x3", "--f", "x3^2"),
        ("qding", "--k", "3", "--potential", "0.3*x3"),
        ("hessian", "--k", "4", "--f", "x3", "--g", "x1 + x3^2"),
        ("aterms", "--klist", "2,4", "--f", "x3^2"),
        ("expand", "--klist", "4,6,8,12,16"),
    ],
)
def test_other_commands_pass(tmp_path, args):
    code, out = run(tmp_path, *args)
    assert code == 0
    assert (out / f"{args[0]}.json").exists()
    assert (out / f"{args[0]}.csv").exists()


def test_report_round_trip(tmp_path):
    report = {"inputs": {"k": 3}, "outputs": {"x": 0.1 + 0.2}, "checks": [Check("c", 1e-17, 1e-10, True)]}
    path = write_report(report, tmp_path / "r.json")
    back = json.loads(path.read_text())
    assert back["outputs"]["x"] == 0.1 + 0.2
    assert back["checks"] == [{"name": "c", "value": 1e-17, "tol": 1e-10, "pass": True}]


def test_run_config_validation():
    with pytest.raises(ConfigError, match="klist"):
        RunConfig(command="converge", klist=(4, 4)).validate()
    with pytest.raises(ConfigError, match="command"):
        RunConfig(command="nope").validate()
