import math

import numpy as np
import pytest

from genbo.blackbox import AlohaTask, CallableTask
from genbo.core import Dataset, Observation, rng_stream
from genbo.engine import (
    ExperimentConfig,
    Method,
    MethodConfig,
    PriorMode,
    TaskConfig,
    init_dataset,
    mutate,
    new_state,
    run_experiment,
    simple_regret,
    top_unique,
)
from genbo.errors import RejectionBudgetExceeded, RunFailed
from genbo.losses import LossSpec
from genbo.trainer import TrainConfig

FAST = TrainConfig(epochs=30)


def _cfg(**method_kw):
    method = MethodConfig(train=FAST, **method_kw)
    return ExperimentConfig.aloha_defaults(method=method, T=3, B=4, init_size=16)


def test_init_dataset_respects_min_distance():
    task = AlohaTask()
    ds = init_dataset(task, 64, rng_stream(0, "init"), min_edit_distance=4)
    assert len(ds) == ds.initial_size == 64
    assert all(r.y <= -4 for r in ds)
    assert all(r.proposal_logp == pytest.approx(-5 * math.log(26)) for r in ds)


def test_init_dataset_budget():
    task = CallableTask(lambda x: 0.0, 2, 2)
    with pytest.raises(RejectionBudgetExceeded):
        init_dataset(task, 4, rng_stream(0, "init"), min_edit_distance=1)


def test_simple_regret_clamps_roundoff():
    assert simple_regret(-3.0, 0.0) == 3.0
    assert simple_regret(1.0 + 1e-15, 1.0) == 0.0


def test_top_unique_and_mutate():
    ds = Dataset(2)
    for x, y in [((0, 0), 1.0), ((0, 0), 1.0), ((1, 1), 3.0), ((1, 0), 2.0)]:
        ds.append(Observation(x, y, 0, 0.0))
    assert top_unique(ds, 2) == [(1, 1), (1, 0)]
    child = mutate((0, 0, 0, 0), 2, 5, rng_stream(0, "m"))
    assert sum(a != b for a, b in zip(child, (0, 0, 0, 0))) <= 2


def test_labels():
    assert MethodConfig().label == "GenBO-rPL-sEI-noprior"
    assert MethodConfig(Method.MUTATION).label == "RandomMutation"
    m = MethodConfig(loss=LossSpec("fKL", use_importance_weights=True), utility="EI", prior="prior",
                     train=TrainConfig(regularizer="exp"), cbas_last_batch_only=True)
    assert m.label == "GenBO-fKL-EI-prior-logits-exp-lastbatch"


def test_kl_loss_rejects_signed_utility():
    with pytest.raises(ValueError):
        MethodConfig(loss=LossSpec("bfKL"), utility="SR")


@pytest.mark.parametrize("bad", [dict(T=0), dict(B=0), dict(init_size=1), dict(noise_sigma=-1)])
def test_experiment_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_run_accounting_and_monotone_best():
    res = run_experiment(_cfg(), seed=0)
    assert [r.round for r in res.records] == [1, 2, 3]
    assert [r.n_evals for r in res.records] == [20, 24, 28]
    best = [res.initial_best_y] + [r.best_y for r in res.records]
    assert all(a <= b for a, b in zip(best, best[1:]))
    assert res.regret_trace[0] == res.initial_regret
    assert all(d.final_loss <= d.initial_loss + 1e-9 for d in res.state.diagnostics)


def test_run_is_deterministic():
    a = run_experiment(_cfg(), seed=4)
    b = run_experiment(_cfg(), seed=4)
    assert a.records == b.records
    assert np.array_equal(a.state.params.logits, b.state.params.logits)


def test_threshold_rises_with_schedule():
    res = run_experiment(_cfg(utility="EI", loss=LossSpec("fKL")), seed=1)
    thr = [r.threshold for r in res.records]
    assert all(a <= b for a, b in zip(thr, thr[1:]))


def test_baseline_rows_have_nan_training_fields():
    res = run_experiment(_cfg(method=Method.MUTATION), seed=0)
    assert all(math.isnan(r.final_loss) and math.isnan(r.batch_mean_u) for r in res.records)


def test_prior_mode_anchor_tracks_data():
    state = new_state(_cfg(prior=PriorMode.PRIOR), seed=0)
    assert np.allclose(state.theta0.probs(), state.prior.probs, atol=0.02)


def test_last_batch_training_runs():
    res = run_experiment(_cfg(loss=LossSpec("fKL"), utility="PI", cbas_last_batch_only=True), seed=0)
    assert len(res.records) == 3


def test_ehrlich_run_small():
    cfg = ExperimentConfig(task=TaskConfig.ehrlich(), method=MethodConfig(loss=LossSpec("bfKL"), utility="PI", train=FAST),
                           T=2, B=8, init_size=16)
    res = run_experiment(cfg, seed=0)
    assert res.state.f_star == 1.0
    assert 0.0 <= res.final_regret <= 2.0


def test_failure_carries_partial_result():
    # SR utilities are all negative, and fKL refuses them: constructing bypasses the config check
    cfg = _cfg(loss=LossSpec("fKL"), utility="EI")
    object.__setattr__(cfg.method, "utility", "SR")
    with pytest.raises(RunFailed) as info:
        run_experiment(cfg, seed=0)
    assert info.value.partial is not None
    assert info.value.partial.records == []
