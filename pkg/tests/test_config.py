import pytest

from genbo.config import load_config, parse_config
from genbo.engine import Method, PriorMode
from genbo.errors import ConfigError
from genbo.losses import LossKind, RegularizerKind


def test_defaults_for_aloha():
    plan = parse_config('task.name = "aloha"\n')
    assert plan.seeds == [0]
    labels = [e.method.label for e in plan.experiments]
    assert labels == ["GenBO-rPL-sEI-noprior", "RandomMutation"]
    exp = plan.experiments[0]
    assert (exp.T, exp.B, exp.init_size) == (10, 8, 64)


def test_ehrlich_defaults_and_overrides():
    plan = parse_config('task.name = "ehrlich"\nrun.rounds = 4\nrun.seeds = [3, 5]\n')
    exp = plan.experiments[0]
    assert (exp.T, exp.B, exp.init_size) == (4, 128, 128)
    assert exp.task.length == 15
    assert plan.seeds == [3, 5]


def test_settings_acronyms_map_to_keys():
    text = """
task.name = "aloha"
run.methods = ["genbo"]
genbo.loss = "fKL"
genbo.utility = "EI"
genbo.logits = true
genbo.prior = "prior"
genbo.regularizer = "exp"
genbo.reg0 = 0.5
train.epochs = 7
"""
    m = parse_config(text).experiments[0].method
    assert m.loss.kind is LossKind.FKL and m.loss.use_importance_weights
    assert m.prior is PriorMode.PRIOR
    assert m.train.regularizer is RegularizerKind.EXPONENTIAL
    assert m.train.lambda0 == 0.5 and m.train.epochs == 7
    assert m.label == "GenBO-fKL-EI-prior-logits-exp"


def test_table_syntax_is_equivalent():
    a = parse_config('[genbo]\nloss = "PL"\n[run]\nn_seeds = 2\n')
    b = parse_config('genbo.loss = "PL"\nrun.n_seeds = 2\n')
    assert a.experiments == b.experiments and a.seeds == b.seeds == [0, 1]


def test_variants_expand():
    text = """
run.methods = ["genbo"]
variants.a.loss = "PL"
variants.b.loss = "bfKL"
variants.b.utility = "PI"
variants.b.train.epochs = 3
"""
    exps = parse_config(text).experiments
    assert [e.method.label for e in exps] == ["a", "b"]
    assert exps[1].method.train.epochs == 3
    assert all(e.method.method is Method.GENBO for e in exps)


def test_seed_offset_env(monkeypatch):
    monkeypatch.setenv("GENBO_SEED_OFFSET", "100")
    assert parse_config("run.seeds = [0, 2]\n").seeds == [100, 102]
    monkeypatch.setenv("GENBO_SEED_OFFSET", "x")
    with pytest.raises(ConfigError):
        parse_config("run.seeds = [0]\n")


@pytest.mark.parametrize(
    "text, line",
    [
        ('task.name = "aloha"\nrun.rounds = 0\n', 2),
        ('task.name = "aloha"\n\ngenbo.bogus = 1\n', 3),
        ('task.name = "aloha"\nrun.batch_size = "eight"\n', 2),
        ('task.name = "moon"\n', 1),
        ('genbo.loss = "fKL"\ngenbo.utility = "SR"\n', 2),
        ('genbo.p_flip = 0.7\n', 1),
        ('run.seeds = [0]\nrun.n_seeds = 3\n', 2),
        ('threshold.p_start = 0.9\nthreshold.p_end = 0.5\n', 1),
        ('task.name = "aloha"\ngenbo.loss = \n', 2),
    ],
)
def test_errors_are_line_anchored(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "cfg.toml")
    assert info.value.line == line
    assert str(info.value).startswith(f"cfg.toml:{line}:")


def test_duplicate_labels_rejected():
    with pytest.raises(ConfigError):
        parse_config('run.methods = ["genbo", "genbo"]\n')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.toml"))
    assert files
    for f in files:
        assert load_config(f).experiments
