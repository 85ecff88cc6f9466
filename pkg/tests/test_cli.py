import subprocess
import sys

import pytest

from clustertransfer import cli
from clustertransfer.cli import main, parse_args, parse_grid, parse_qubit
from clustertransfer.protocol import TransferError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_transfer_g(capsys):
    code, out, _ = run(capsys, "transfer", "--input", "g")
    assert code == 0
    assert "|g,0L,1R> +1.000000000000+0.000000000000j" in out
    assert "fidelity 1.000000000000" in out


def test_transfer_g_prime_default(capsys):
    code, out, _ = run(capsys, "transfer")
    assert code == 0
    assert "input=g'" in out and "|g,1L,0R> +1.000000000000" in out


def test_transfer_with_decay(capsys):
    code, out, _ = run(capsys, "transfer", "--input", "+", "--gamma", "0.05", "--kappa", "0.05")
    assert code == 0
    assert "fidelity 0.930555635806" in out


def test_transfer_trace(capsys):
    code, out, _ = run(capsys, "transfer", "--trace-steps")
    assert code == 0
    trace = out.split("trace:\n")[1].splitlines()
    assert len(trace) == 6 and trace[1].startswith("1 i wait mode=L")


def test_swap4(capsys):
    code, out, _ = run(capsys, "swap4", "--input", "-")
    assert code == 0
    assert "fidelity 1.000000000000" in out
    assert "stages=3" in out


def test_register_chain(capsys):
    code, out, _ = run(capsys, "register", "--n", "2", "--graph", "chain")
    assert code == 0
    assert "dim=400" in out and "steps=8" in out
    assert "fidelity 1.000000000000" in out


def test_register_graph_file(capsys, tmp_path):
    path = tmp_path / "tri.txt"
    path.write_text("3\n0 1\n1 2\n0 2\n")
    code, out, _ = run(capsys, "register", "--graph", str(path), "--scheme", "four")
    assert code == 0
    assert "n=3" in out and "steps=9" in out and "fidelity 1.000000000000" in out


def test_register_too_large_is_usage_error(capsys):
    code, _, err = run(capsys, "register", "--n", "5")
    assert code == 2 and "exceeds budget" in err


def test_register_failure_exit_one(capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise TransferError("forced")
    monkeypatch.setattr(cli, "transfer_register", broken)
    code, _, err = run(capsys, "register", "--n", "1")
    assert code == 1 and "forced" in err


def test_sweep_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--gamma", "0,0.05", "--kappa", "0.05")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "gamma_over_h,kappa_over_h,s,fidelity"
    assert lines[1].startswith("0,0.05,1.2,0.")
    assert lines[2] == "0.05,0.05,1.2,0.930555635806"
    assert len(lines) == 3


def test_sweep_outdir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTDIR_ENV, str(tmp_path / "results"))
    code, _, err = run(capsys, "sweep", "--gamma", "0:0.5:3", "--kappa", "0.01", "--out", "f.csv")
    assert code == 0
    text = (tmp_path / "results" / "f.csv").read_text()
    assert text.splitlines()[1].startswith("0,0.01,1.2,")
    assert len(text.splitlines()) == 4
    assert "wrote 3 rows" in err


def test_outputs_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p, workers in zip(paths, ("1", "3")):
        assert main(["sweep", "--gamma", "0:0.5:6", "--kappa", "0.01,0.1", "--out", str(p),
                     "--workers", workers]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    capsys.readouterr()
    first = run(capsys, "mbqc-demo", "--angles", "0.3,0.2,0.1", "--seed", "4")
    second = run(capsys, "mbqc-demo", "--angles", "0.3,0.2,0.1", "--seed", "4")
    assert first == second


def test_mbqc_demo(capsys):
    code, out, _ = run(capsys, "mbqc-demo", "--angles", "1.5708,0,0", "--seed", "7")
    assert code == 0
    assert len([ln for ln in out.splitlines() if ln[:2] in ("0 ", "1 ", "2 ", "3 ")]) == 4
    assert "byproduct" in out


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 5 and all(ln.startswith("PASS ") for ln in lines)


@pytest.mark.parametrize("argv", [
    ["transfer", "--bogus"],
    ["nonsense"],
    [],
    ["swap4", "--gamma", "0.1"],
    ["transfer", "--input", "x"],
    ["transfer", "--gamma", "0:1:3"],
    ["transfer", "--s", "-1"],
    ["sweep", "--gamma", "a:b:c"],
    ["sweep", "--kappa", "-0.1"],
    ["mbqc-demo", "--angles", "1,2"],
    ["register", "--n", "0"],
    ["register", "--graph", "/nonexistent/graph.txt"],
    ["transfer", "--config", "/nonexistent/config.txt"],
])
def test_usage_errors_exit_two(capsys, argv):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\ns = 1.5\nkappa = 0.01\nfock-cutoff = 2\n")
    c = parse_args(["sweep", "--config", str(cfg), "--s", "1.1"])
    assert c.s == 1.1  # flag beats file
    assert c.kappa == "0.01" and c.fock_cutoff == 2  # file beats default
    assert c.workers == 1 and c.seed == 0  # defaults


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as err:
        parse_args(["sweep", "--config", str(cfg)])
    assert err.value.code == 2
    cfg.write_text("s = fast\n")
    with pytest.raises(SystemExit):
        parse_args(["sweep", "--config", str(cfg)])


def test_defaults():
    c = parse_args(["transfer"])
    assert (c.s, c.fock_cutoff, c.seed, c.h_left) == (1.2, 1, 0, 1.2)
    assert not c.dissipative


def test_parse_grid():
    assert parse_grid("0:0.5:3") == [0.0, 0.25, 0.5]
    assert parse_grid("0.01,0.05") == [0.01, 0.05]
    assert len(parse_grid("0:0.5:50")) == 50


def test_parse_qubit():
    assert list(parse_qubit("g'")) == [0, 1]
    assert abs(parse_qubit("3,4j")[1] - 0.8j) < 1e-15


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "clustertransfer", "selftest"], capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.count("PASS") == 5
