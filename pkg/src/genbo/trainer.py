"""Full-batch Adam fitting of proposal logits to a loss plus the anchor regularizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from genbo.errors import EmptyPairs, NonFiniteLoss
from genbo.losses import LossSpec, RegularizerKind, evaluate_loss, make_pairs, regularizer
from genbo.proposal import MeanFieldParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip_norm: float = 10.0
    warm_start: bool = True
    lambda0: float = 1.0
    regularizer: RegularizerKind = RegularizerKind.QUADRATIC

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be nonnegative")
        object.__setattr__(self, "regularizer", RegularizerKind(self.regularizer))


@dataclass
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, params: np.ndarray) -> "AdamState":
        return cls(params.copy(), np.zeros_like(params), np.zeros_like(params))


def adam_step(state: AdamState, grad: np.ndarray, lr: float, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    """One bias-corrected Adam update, returned as a new state."""
    if grad.shape != state.params.shape:
        raise ValueError("gradient shape does not match parameters")
    step = state.step + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1**step)
    v_hat = v / (1 - beta2**step)
    params = state.params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(params, m, v, step)


def clip_by_norm(grad: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.sqrt((grad * grad).sum()))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


@dataclass
class FitDiagnostics:
    initial_loss: float
    final_loss: float
    grad_norms: list[float] = field(default_factory=list)
    n_pairs: int | None = None
    skipped: bool = False

    @property
    def final_grad_norm(self) -> float:
        return self.grad_norms[-1] if self.grad_norms else float("nan")


@dataclass
class TrainingData:
    """Records to fit on: tokens, utilities and the log density each was sampled with."""

    X: np.ndarray
    u: np.ndarray
    sampled_logp: np.ndarray


def make_objective(spec: LossSpec, data: TrainingData, prior, theta0, n, config: TrainConfig, rng):
    """Closure ``logits -> (value, grad)`` for the full regularized loss.

    Preference pairs are drawn once here so the objective is deterministic
    for the whole fit.
    """
    pairs = None
    if spec.kind.is_preference:
        pairs = make_pairs(data.X, data.u, rng)
        if not pairs:
            raise EmptyPairs("all utilities tied; no preference pairs")

    def objective(logits: np.ndarray):
        params = MeanFieldParams(logits)
        value, grad = evaluate_loss(
            spec, params, prior, pairs=pairs, X=data.X, u=data.u, sampled_logp=data.sampled_logp
        )
        if config.lambda0 > 0:
            try:
                rv, rg = regularizer(logits, theta0, n, config.lambda0, config.regularizer)
            except OverflowError:
                rv, rg = float("inf"), np.zeros_like(logits)
            value, grad = value + rv, grad + rg
        return value, grad

    objective.n_pairs = None if pairs is None else len(pairs)
    return objective


def fit(params: MeanFieldParams, loss_spec: LossSpec, data: TrainingData, prior, theta0, n, config: TrainConfig, rng):
    """Run ``config.epochs`` full-batch Adam steps and return ``(params, diagnostics)``.

    ``n`` is the total observation count driving the regularizer schedule.
    Raises NonFiniteLoss if the loss or gradient stops being finite.
    """
    theta0 = theta0.logits if isinstance(theta0, MeanFieldParams) else np.asarray(theta0)
    start = params.logits if config.warm_start else theta0
    objective = make_objective(loss_spec, data, prior, theta0, n, config, rng)

    state = AdamState.fresh(start)
    initial_loss = None
    grad_norms = []
    for epoch in range(config.epochs):
        value, grad = objective(state.params)
        norm = float(np.sqrt((grad * grad).sum()))
        if not (np.isfinite(value) and np.isfinite(norm)):
            raise NonFiniteLoss(
                f"non-finite loss at epoch {epoch}: value={value}, grad_norm={norm}, "
                f"max|logit|={np.abs(state.params).max():.3g}, kind={loss_spec.kind.value}, n={n}"
            )
        if initial_loss is None:
            initial_loss = value
        grad_norms.append(norm)
        state = adam_step(
            state,
            clip_by_norm(grad, config.grad_clip_norm),
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        )
    final_loss, final_grad = objective(state.params)
    if not np.isfinite(final_loss):
        raise NonFiniteLoss(f"non-finite final loss {final_loss}")
    grad_norms.append(float(np.sqrt((final_grad * final_grad).sum())))
    log.debug("fit %s: loss %.6g -> %.6g", loss_spec.kind.value, initial_loss, final_loss)
    diag = FitDiagnostics(initial_loss, final_loss, grad_norms, objective.n_pairs)
    return MeanFieldParams(state.params), diag
