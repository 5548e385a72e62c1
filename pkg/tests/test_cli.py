import json

import pytest

from cli_cases import FAST_RUNS, data_rows
from lyapstrip.cli import UsageError, main, parse_cli, read_config, run_experiment
from lyapstrip.lattice import DisorderSpec


def run(capsys, args):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_lyapunov_example():
    cfg = parse_cli("lyapunov --width 2 --energy 0 --lambda 1 --steps 100000 --seed 7".split())
    assert cfg.subcommand == "lyapunov"
    assert (cfg.width, cfg.energy, cfg.coupling, cfg.steps, cfg.seed) == (2, 0.0, 1.0, 100000, 7)
    assert cfg.reorth_period == 10 and cfg.threads == 1 and cfg.out == "-"
    assert cfg.dist == DisorderSpec.uniform(-0.5, 0.5)


def test_parse_dist_grammar():
    cfg = parse_cli(["barrier-prob", "--dist", "uniform:-2,2"])
    assert cfg.dist == DisorderSpec.uniform(-2, 2)
    cfg = parse_cli(["lyapunov", "--dist", "bernoulli:0.3,0,1"])
    assert cfg.dist.kind == "bernoulli" and cfg.dist.p == 0.3


@pytest.mark.parametrize("args, needle", [
    (["lyapunov", "--width", "-1"], "width"),
    (["lyapunov", "--steps", "1e5x"], "steps"),
    (["lyapunov", "--bogus"], "--bogus"),
    (["lyapunov", "--dist", "cauchy:1"], "dist"),
    (["nosuch"], "nosuch"),
    ([], "subcommand"),
])
def test_usage_errors(capsys, args, needle):
    with pytest.raises(UsageError, match=needle):
        parse_cli(args)
    code, _, err = run(capsys, args)
    assert code == 2 and needle in err


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nwidth = 3\nsteps=5000\nreorth-period = 5\n")
    assert read_config(cfg_file)["reorth_period"] == "5"
    cfg = parse_cli(["lyapunov", "--config", str(cfg_file), "--width", "2"])
    assert cfg.width == 2 and cfg.steps == 5000 and cfg.reorth_period == 5


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nosuchkey=1\n")
    with pytest.raises(UsageError, match="nosuchkey"):
        parse_cli(["lyapunov", "--config", str(bad)])
    bad.write_text("steps=many\n")
    with pytest.raises(UsageError, match="steps"):
        parse_cli(["lyapunov", "--config", str(bad)])
    with pytest.raises(UsageError):
        parse_cli(["lyapunov", "--config", str(tmp_path / "missing.cfg")])


def test_io_error_exit(capsys, tmp_path):
    target = tmp_path / "no" / "such" / "dir.csv"
    code, _, err = run(capsys, ["corollary-bound", "--out", str(target)])
    assert code == 4 and str(target.parent) in err


def test_numeric_error_exit(capsys):
    code, _, err = run(capsys, ["msa-schedule", "--width", "4", "-A", "3", "--strict"])
    assert code == 3 and "minimal feasible A" in err


def test_msa_schedule_rows(capsys):
    code, out, _ = run(capsys, ["msa-schedule", "--width", "4", "--stages", "6", "-A", "3"])
    assert code == 0
    rows = data_rows(out)
    assert rows[0].startswith("s,log_N,log_eps,delta")
    assert len(rows) == 1 + 6
    assert "# stage0_feasible: false" in out


def test_lyapunov_schema(capsys):
    code, out, _ = run(capsys, ["lyapunov", "--width", "3", "--steps", "5000"])
    rows = data_rows(out)
    assert code == 0 and rows[0] == "k,exponent,stderr" and len(rows) == 7
    values = [float(r.split(",")[1]) for r in rows[1:]]
    assert values == sorted(values, reverse=True)


def test_metadata_and_float_format(capsys):
    code, out, _ = run(capsys, ["corollary-bound", "--widths", "3", "--seed", "5"])
    assert "# seed: 5" in out and "# version:" in out and "# wall_time_s:" in out
    value = data_rows(out)[1].split(",")[-1]
    assert len(value.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) == 17


def test_json_output(capsys):
    code, out, _ = run(capsys, ["corollary-bound", "--widths", "2,3", "--format", "json"])
    doc = json.loads(out)
    assert code == 0 and doc["metadata"]["seed"] == 0 and len(doc["rows"]) == 2


def test_atomic_file_output(tmp_path):
    target = tmp_path / "out.csv"
    assert main(["corollary-bound", "--out", str(target)]) == 0
    assert target.read_text().startswith("# subcommand: corollary-bound")
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]


@pytest.mark.parametrize("name", sorted(FAST_RUNS))
def test_every_subcommand_runs(name):
    doc = run_experiment(parse_cli([name, *FAST_RUNS[name]]))
    assert doc.rows and doc.metadata["subcommand"] == name


@pytest.mark.parametrize("name", ["wegner", "barrier-prob", "msa-chain", "green-decay"])
def test_rerun_and_threads_identical(name, tmp_path):
    bodies = []
    for i, threads in enumerate(("1", "1", "8")):
        target = tmp_path / f"{i}.csv"
        assert main([name, *FAST_RUNS[name], "--seed", "3", "--threads", threads,
                     "--out", str(target)]) == 0
        bodies.append([r for r in data_rows(target.read_text())])
    assert bodies[0] == bodies[1] == bodies[2]
