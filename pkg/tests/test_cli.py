import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from genbo import cli, proposal, selfcheck
from genbo.plotting import CSV_HEADER, read_curves

SMALL = """
task.name = "aloha"
run.rounds = 3
run.batch_size = 4
run.init_size = 16
run.seeds = [0, 1]
train.epochs = 20
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_all_outputs(config, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 0
    rows = _rows(out / "results.csv")
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 2 * 2 * 3
    assert [(r[0], r[1]) for r in rows[1::3]] == [
        ("GenBO-rPL-sEI-noprior", "0"), ("GenBO-rPL-sEI-noprior", "1"), ("RandomMutation", "0"), ("RandomMutation", "1"),
    ]
    summary = json.loads((out / "summary.json").read_text())
    for method, stats in summary.items():
        finals = [float(r[6]) for r in rows[1:] if r[0] == method and r[2] == "3"]
        assert abs(stats["final_regret_mean"] - np.mean(finals)) <= 1e-12
        assert abs(stats["final_regret_std"] - np.std(finals)) <= 1e-12
    assert len(list((out / "checkpoints").glob("*.json"))) == 2
    ET.parse(out / "regret.svg")


def test_run_is_byte_identical_and_parallel_safe(config, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["run", "--config", str(config), "--out", str(a)]) == 0
    assert cli.main(["run", "--config", str(config), "--out", str(b)]) == 0
    assert cli.main(["run", "--config", str(config), "--out", str(c), "--parallelism", "2"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert (a / "results.csv").read_bytes() == (c / "results.csv").read_bytes()
    assert (a / "regret.svg").read_bytes() == (b / "regret.svg").read_bytes()


def test_overwrite_guard(config, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 0
    assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 2
    assert cli.main(["run", "--config", str(config), "--out", str(out), "--force"]) == 0


def test_config_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('task.name = "aloha"\nrun.rounds = -1\n')
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.toml:2:" in capsys.readouterr().err


def test_runtime_failure_exit_1_with_partial_csv(config, tmp_path, monkeypatch):
    from genbo import engine
    from genbo.errors import NonFiniteLoss

    real = engine.run_round

    def flaky(state, t):
        if t == 3:
            raise NonFiniteLoss("injected")
        return real(state, t)

    monkeypatch.setattr(engine, "run_round", flaky)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out)]) == 1
    rows = _rows(out / "results.csv")
    genbo_rows = [r for r in rows[1:] if r[0].startswith("GenBO")]
    assert len(genbo_rows) == 2 * 2
    assert len(rows) == 1 + 4 + 2 * 3


def test_plot_command(config, tmp_path):
    out = tmp_path / "out"
    cli.main(["run", "--config", str(config), "--out", str(out)])
    svg = tmp_path / "fig" / "r.svg"
    assert cli.main(["plot", "--csv", str(out / "results.csv"), "--out", str(svg)]) == 0
    text = svg.read_text()
    # legend is ordered by final mean regret, highest first
    curves = read_curves(out / "results.csv")
    order = sorted(curves.regret, key=lambda m: -curves.final_mean(m))
    positions = [text.index(f">{m}<") for m in order]
    assert positions == sorted(positions)


def test_plot_schema_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(CSV_HEADER) + "\n")
    assert cli.main(["plot", "--csv", str(empty), "--out", str(tmp_path / "x.svg")]) == 2
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    assert cli.main(["plot", "--csv", str(wrong), "--out", str(tmp_path / "x.svg")]) == 2
    assert cli.main(["plot", "--csv", str(tmp_path / "none.csv"), "--out", str(tmp_path / "x.svg")]) == 2


def test_plot_single_method(tmp_path):
    path = tmp_path / "one.csv"
    rows = [",".join(CSV_HEADER)] + [f"m,{s},{r},0,0,0,{3 - r + s},nan,nan" for s in (0, 1) for r in (1, 2, 3)]
    path.write_text("\n".join(rows) + "\n")
    svg = tmp_path / "one.svg"
    assert cli.main(["plot", "--csv", str(path), "--out", str(svg)]) == 0
    assert svg.read_text().count(">m<") == 1


def test_selfcheck_passes(capsys):
    assert cli.main(["selfcheck"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_selfcheck_catches_sign_error(monkeypatch, capsys):
    real = proposal.grad_log_prob
    monkeypatch.setattr(proposal, "grad_log_prob", lambda params, seq: -real(params, seq))
    assert selfcheck.main() == 1
    assert "FAIL" in capsys.readouterr().out
