"""The outer optimization loop, the random-mutation baseline and run bookkeeping."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from genbo.acquisition import ThresholdSchedule, UtilityKind, compute_threshold, utility
from genbo.blackbox import AlohaTask, BlackBox, ehrlich_new
from genbo.core import AMINO_ACIDS, ENGLISH_UPPER, Dataset, Observation, RoundRecord, Vocab, rng_stream
from genbo.errors import EmptyPairs, GenBOError, RejectionBudgetExceeded, RunFailed
from genbo.losses import LossSpec
from genbo.proposal import (
    MeanFieldParams,
    init_params,
    log_prob_batch,
    prior_from_data,
    prior_uniform,
    sample,
)
from genbo.trainer import FitDiagnostics, TrainConfig, TrainingData, fit

log = logging.getLogger(__name__)

REJECTION_BUDGET = 10**6


class Method(str, Enum):
    GENBO = "genbo"
    MUTATION = "mutation"


class PriorMode(str, Enum):
    NOPRIOR = "noprior"
    PRIOR = "prior"


@dataclass(frozen=True)
class TaskConfig:
    name: str = "aloha"
    vocab: str = ENGLISH_UPPER
    target: str = "ALOHA"
    min_edit_distance: int | None = 4
    length: int = 15
    motifs: int = 2
    motif_length: int = 4
    quantization: int = 4

    def __post_init__(self):
        if self.name not in ("aloha", "ehrlich"):
            raise ValueError(f"unknown task {self.name!r}")

    @classmethod
    def ehrlich(cls, length=15, motifs=2, motif_length=4, quantization=4) -> "TaskConfig":
        return cls("ehrlich", AMINO_ACIDS, "", None, length, motifs, motif_length, quantization)


@dataclass(frozen=True)
class MethodConfig:
    method: Method = Method.GENBO
    loss: LossSpec = field(default_factory=LossSpec)
    utility: UtilityKind = UtilityKind.SEI
    sei_sharpness: float = 1.0
    prior: PriorMode = PriorMode.NOPRIOR
    cbas_last_batch_only: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    n_mutations: int = 3
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "utility", UtilityKind(self.utility))
        object.__setattr__(self, "prior", PriorMode(self.prior))
        if self.method is Method.GENBO and not self.loss.kind.is_preference and not self.utility.nonnegative:
            raise ValueError(f"utility {self.utility.value} can be negative; {self.loss.kind.value} needs u >= 0")
        if self.sei_sharpness <= 0:
            raise ValueError("sei_sharpness must be positive")
        if self.n_mutations < 1:
            raise ValueError("n_mutations must be >= 1")
        if not self.label:
            object.__setattr__(self, "label", self.default_label())

    def default_label(self) -> str:
        if self.method is Method.MUTATION:
            return "RandomMutation"
        parts = ["GenBO", self.loss.kind.value, self.utility.value, self.prior.value]
        if self.loss.use_importance_weights and not self.loss.kind.is_preference:
            parts.append("logits")
        if self.train.regularizer.value == "exp":
            parts.append("exp")
        if self.cbas_last_batch_only:
            parts.append("lastbatch")
        return "-".join(parts)


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    T: int = 10
    B: int = 8
    init_size: int = 64
    seeds: tuple[int, ...] = (0,)
    noise_sigma: float = 0.0
    p_start: float = 0.5
    p_end: float = 0.99

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.init_size < 2:
            raise ValueError("init_size must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def schedule(self) -> ThresholdSchedule:
        return ThresholdSchedule(self.T, self.p_start, self.p_end)

    @classmethod
    def aloha_defaults(cls, **kw) -> "ExperimentConfig":
        return cls(**{"task": TaskConfig(), "T": 10, "B": 8, "init_size": 64, **kw})

    @classmethod
    def ehrlich_defaults(cls, **kw) -> "ExperimentConfig":
        return cls(**{"task": TaskConfig.ehrlich(), "T": 32, "B": 128, "init_size": 128, **kw})

    def with_method(self, method: MethodConfig) -> "ExperimentConfig":
        return replace(self, method=method)

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def build_task(cfg: TaskConfig, seed: int):
    if cfg.name == "aloha":
        return AlohaTask(cfg.target, Vocab.alphabetical(cfg.vocab))
    return ehrlich_new(cfg.length, cfg.motifs, cfg.motif_length, cfg.quantization, rng_stream(seed, "task", 0))


def _vocab_size(task) -> int:
    return task.vocab.size


def uniform_logp(task) -> float:
    return -task.seq_len * math.log(_vocab_size(task))


def init_dataset(task, size: int, rng: np.random.Generator, min_edit_distance: int | None = None,
                 bb: BlackBox | None = None, noise_rng=None) -> Dataset:
    """Uniform random round-0 data.

    With ``min_edit_distance`` set, members are rejection-sampled so their
    objective is at most ``-min_edit_distance`` (for ALOHA: edit distance at least
    that far from the target).
    """
    if size < 2:
        raise ValueError("initial dataset needs at least 2 records")
    bb = bb or BlackBox(task)
    M, V = task.seq_len, _vocab_size(task)
    logp = uniform_logp(task)
    ds = Dataset(M)
    draws = 0
    while len(ds) < size:
        if draws >= REJECTION_BUDGET:
            raise RejectionBudgetExceeded(f"only {len(ds)} of {size} records after {draws} draws")
        draws += 1
        x = tuple(rng.integers(V, size=M).tolist())
        if min_edit_distance is not None and task.evaluate(x) > -min_edit_distance:
            continue
        ds.append(Observation(x, bb.observe(x, noise_rng), 0, logp))
    return ds


def simple_regret(best_y: float, f_star: float) -> float:
    r = f_star - best_y
    if -1e-12 < r < 0:
        return 0.0
    return r


@dataclass
class RunState:
    config: ExperimentConfig
    seed: int
    task: object
    bb: BlackBox
    dataset: Dataset
    params: MeanFieldParams
    theta0: MeanFieldParams
    prior: object
    records: list[RoundRecord] = field(default_factory=list)
    diagnostics: list[FitDiagnostics] = field(default_factory=list)

    @property
    def f_star(self) -> float:
        return self.bb.f_star


def new_state(config: ExperimentConfig, seed: int, task=None) -> RunState:
    task = task if task is not None else build_task(config.task, seed)
    bb = BlackBox(task, config.noise_sigma)
    min_ed = config.task.min_edit_distance if config.task.name == "aloha" else None
    ds = init_dataset(task, config.init_size, rng_stream(seed, "init", 0), min_ed, bb, rng_stream(seed, "noise", 0))
    M, V = task.seq_len, _vocab_size(task)
    if config.method.prior is PriorMode.PRIOR:
        prior = prior_from_data(ds, V)
        theta0 = MeanFieldParams(prior.logits() + init_params(M, V, rng_stream(seed, "init", 1)).logits)
    else:
        prior = prior_uniform(M, V)
        theta0 = init_params(M, V, rng_stream(seed, "init", 1))
    return RunState(config, seed, task, bb, ds, theta0.copy(), theta0, prior)


def threshold(state: RunState, t: int) -> float:
    sentinel = getattr(state.task, "infeasible_value", None)
    return compute_threshold(state.dataset, t, state.config.schedule, sentinel)


def round_utilities(state: RunState, ys, thr: float) -> np.ndarray:
    m = state.config.method
    return np.asarray(utility(ys, thr, m.utility, m.sei_sharpness), dtype=float)


def _evaluate_batch(state: RunState, X: np.ndarray, logps: np.ndarray, t: int) -> np.ndarray:
    noise_rng = rng_stream(state.seed, "noise", t)
    ys = []
    for x, lp in zip(X, logps):
        y = state.bb.observe(x, noise_rng)
        state.dataset.append(Observation(tuple(x.tolist()), y, t, float(lp)))
        ys.append(y)
    return np.array(ys)


def _record(state: RunState, t: int, thr: float, batch_mean_u: float, final_loss: float) -> RoundRecord:
    ds = state.dataset
    rec = RoundRecord(t, thr, ds.best_y, simple_regret(ds.best_y, state.f_star), batch_mean_u, final_loss, len(ds))
    state.records.append(rec)
    return rec


def run_round(state: RunState, t: int) -> RoundRecord:
    """One GenBO round: threshold, utilities, fit, sample a batch, evaluate."""
    cfg = state.config
    if not 1 <= t <= cfg.T:
        raise ValueError(f"round {t} outside [1, {cfg.T}]")
    ds = state.dataset
    thr = threshold(state, t)
    rounds = ds.last_round() if cfg.method.cbas_last_batch_only else None
    data = TrainingData(ds.tokens(rounds), round_utilities(state, ds.ys(rounds), thr), ds.proposal_logps(rounds))
    try:
        state.params, diag = fit(
            state.params, cfg.method.loss, data, state.prior, state.theta0, len(ds),
            cfg.method.train, rng_stream(state.seed, "train", t),
        )
    except EmptyPairs:
        log.info("round %d: all utilities tied, proposal left unchanged", t)
        diag = FitDiagnostics(math.nan, math.nan, skipped=True)
    state.diagnostics.append(diag)

    X = sample(state.params, rng_stream(state.seed, "sample", t), cfg.B)
    ys = _evaluate_batch(state, X, log_prob_batch(state.params, X), t)
    return _record(state, t, thr, float(round_utilities(state, ys, thr).mean()), diag.final_loss)


def top_unique(dataset: Dataset, k: int) -> list[tuple[int, ...]]:
    """The ``k`` best distinct sequences by y; ties keep first-seen order."""
    best: dict[tuple[int, ...], float] = {}
    for r in dataset:
        if r.tokens not in best or r.y > best[r.tokens]:
            best[r.tokens] = r.y
    ranked = sorted(best.items(), key=lambda kv: -kv[1])
    return [seq for seq, _ in ranked[:k]]


def mutate(parent, n_mutations: int, vocab_size: int, rng: np.random.Generator) -> tuple[int, ...]:
    child = list(parent)
    positions = rng.choice(len(child), size=min(n_mutations, len(child)), replace=False)
    for pos in positions:
        child[int(pos)] = int(rng.integers(vocab_size))
    return tuple(child)


def baseline_random_mutation(state: RunState, t: int) -> RoundRecord:
    """Mutate uniformly chosen members of the top-B pool, ``n_mutations`` sites each."""
    cfg = state.config
    ds = state.dataset
    thr = threshold(state, t)
    pool = top_unique(ds, cfg.B)
    rng = rng_stream(state.seed, "sample", t)
    V = _vocab_size(state.task)
    X = np.array([
        mutate(pool[int(rng.integers(len(pool)))], cfg.method.n_mutations, V, rng) for _ in range(cfg.B)
    ], dtype=np.int64)
    _evaluate_batch(state, X, np.full(cfg.B, uniform_logp(state.task)), t)
    return _record(state, t, thr, math.nan, math.nan)


@dataclass
class RunResult:
    label: str
    seed: int
    records: list[RoundRecord]
    initial_best_y: float
    initial_regret: float
    config: dict
    wall_time: float
    state: RunState | None = None

    @property
    def final_regret(self) -> float:
        return self.records[-1].simple_regret

    @property
    def regret_trace(self) -> list[float]:
        return [self.initial_regret] + [r.simple_regret for r in self.records]


def run_experiment(config: ExperimentConfig, seed: int, task=None) -> RunResult:
    """Run all T rounds for one seed; deterministic in ``(config, seed)``.

    On failure raises RunFailed carrying the rounds completed so far.
    """
    start = time.perf_counter()
    state = new_state(config, seed, task)
    init_best = state.dataset.best_y
    result = RunResult(config.method.label, seed, state.records, init_best,
                       simple_regret(init_best, state.f_star), config.to_dict(), 0.0, state)
    step = baseline_random_mutation if config.method.method is Method.MUTATION else run_round
    try:
        for t in range(1, config.T + 1):
            step(state, t)
    except GenBOError as exc:
        result.wall_time = time.perf_counter() - start
        raise RunFailed(f"{config.method.label} seed {seed} failed at round {len(state.records) + 1}: {exc}",
                        result) from exc
    result.wall_time = time.perf_counter() - start
    return result
