"""Training losses for the proposal, each returning ``(value, grad)``.

Values are sums over pairs/records. Gradients are w.r.t. the proposal logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from genbo.errors import EmptyPairs, InvalidFlip, NegativeUtility
from genbo.proposal import MeanFieldParams, log_prob_batch, weighted_grad_log_prob


class LossKind(str, Enum):
    PL = "PL"
    RPL = "rPL"
    FKL = "fKL"
    BFKL = "bfKL"

    @property
    def is_preference(self) -> bool:
        return self in (LossKind.PL, LossKind.RPL)


class RegularizerKind(str, Enum):
    QUADRATIC = "quadratic"
    EXPONENTIAL = "exp"


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind = LossKind.RPL
    temperature: float = 1.0
    p_flip: float = 0.1
    use_importance_weights: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not 0 <= self.p_flip < 0.5:
            raise InvalidFlip(f"p_flip must lie in [0, 0.5), got {self.p_flip}")


@dataclass(frozen=True)
class PreferencePair:
    x1: tuple[int, ...]
    x2: tuple[int, ...]
    u1: float
    u2: float

    @property
    def sign(self) -> int:
        return 1 if self.u1 > self.u2 else -1


def make_pairs(X, u, rng: np.random.Generator) -> list[PreferencePair]:
    """Shuffle, pair consecutive records, drop tied pairs.

    With an odd record count the last shuffled record goes unused.
    """
    X = np.asarray(X, dtype=np.int64)
    u = np.asarray(u, dtype=float)
    order = rng.permutation(len(u))
    pairs = []
    for a, b in zip(order[0::2], order[1::2]):
        if u[a] != u[b]:
            pairs.append(PreferencePair(tuple(X[a].tolist()), tuple(X[b].tolist()), float(u[a]), float(u[b])))
    return pairs


def _pair_arrays(pairs):
    X1 = np.array([p.x1 for p in pairs], dtype=np.int64)
    X2 = np.array([p.x2 for p in pairs], dtype=np.int64)
    s = np.array([p.sign for p in pairs], dtype=float)
    return X1, X2, s


def _preference_margin(params, prior, pairs, temperature):
    if not pairs:
        raise EmptyPairs("no preference pairs with distinct utilities")
    X1, X2, s = _pair_arrays(pairs)
    r1 = log_prob_batch(params, X1) - prior.log_prob_batch(X1)
    r2 = log_prob_batch(params, X2) - prior.log_prob_batch(X2)
    return X1, X2, s, temperature * s * (r1 - r2)


def _margin_grad(params, X1, X2, s, temperature, dz):
    # z = temperature * s * (log q(x1) - log q(x2)) + const
    c = dz * temperature * s
    return weighted_grad_log_prob(params, X1, c) - weighted_grad_log_prob(params, X2, c)


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def pl_loss(params: MeanFieldParams, prior, pairs, temperature: float = 1.0):
    """Bradley-Terry preference loss ``sum_i -log sigmoid(z_i)``."""
    X1, X2, s, z = _preference_margin(params, prior, pairs, temperature)
    value = float(np.logaddexp(0.0, -z).sum())
    grad = _margin_grad(params, X1, X2, s, temperature, -_sigmoid(-z))
    return value, grad


def rpl_loss(params: MeanFieldParams, prior, pairs, temperature: float = 1.0, p_flip: float = 0.1):
    """Flip-debiased preference loss.

    Per pair ``((1 - p) l(z) - p l(-z)) / (1 - 2p)`` with ``l(z) = -log sigmoid(z)``.
    """
    if not 0 <= p_flip < 0.5:
        raise InvalidFlip(f"p_flip must lie in [0, 0.5), got {p_flip}")
    X1, X2, s, z = _preference_margin(params, prior, pairs, temperature)
    denom = 1.0 - 2.0 * p_flip
    per_pair = ((1 - p_flip) * np.logaddexp(0.0, -z) - p_flip * np.logaddexp(0.0, z)) / denom
    dz = (-(1 - p_flip) * _sigmoid(-z) - p_flip * _sigmoid(z)) / denom
    return float(per_pair.sum()), _margin_grad(params, X1, X2, s, temperature, dz)


def importance_weights(X, sampled_logp, prior, use_importance_weights: bool) -> np.ndarray:
    """``p0(x) / q_sampled(x)`` per record, or ones when disabled."""
    if not use_importance_weights:
        return np.ones(len(sampled_logp))
    return np.exp(prior.log_prob_batch(X) - np.asarray(sampled_logp, dtype=float))


def _check_utilities(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise NegativeUtility("KL losses need nonnegative utilities")
    return u


def fkl_loss(params: MeanFieldParams, X, u, sampled_logp, prior, use_importance_weights: bool = False):
    """Utility-weighted negative log-likelihood ``-sum_i w_i u_i log q(x_i)``.

    ``sampled_logp`` holds the log density each record was drawn with.
    """
    u = _check_utilities(u)
    X = np.asarray(X, dtype=np.int64)
    c = importance_weights(X, sampled_logp, prior, use_importance_weights) * u
    lq = log_prob_batch(params, X)
    return float(-(c * lq).sum()), -weighted_grad_log_prob(params, X, c)


def bfkl_loss(params: MeanFieldParams, X, u, sampled_logp, prior, use_importance_weights: bool = False):
    """fKL plus the density penalty ``sum_i q(x_i) / q_sampled(x_i)``.

    With importance weights off, both the fKL weights and the penalty
    denominators are dropped, so the penalty is ``sum_i q(x_i)``.
    """
    value, grad = fkl_loss(params, X, u, sampled_logp, prior, use_importance_weights)
    X = np.asarray(X, dtype=np.int64)
    lq = log_prob_batch(params, X)
    # without importance weights the 1 / q_sampled factor is dropped here too
    ratio = np.exp(lq - np.asarray(sampled_logp, dtype=float)) if use_importance_weights else np.exp(lq)
    return value + float(ratio.sum()), grad + weighted_grad_log_prob(params, X, ratio)


def reg_factor(n: float, lambda0: float) -> float:
    """Annealed factor ``lambda0 * log(n)^2 / n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return lambda0 * math.log(n) ** 2 / n


def regularizer(theta, theta0, n: float, lambda0: float = 0.1, kind=RegularizerKind.QUADRATIC):
    theta = theta.logits if isinstance(theta, MeanFieldParams) else np.asarray(theta)
    theta0 = theta0.logits if isinstance(theta0, MeanFieldParams) else np.asarray(theta0)
    lam = reg_factor(n, lambda0)
    d = theta - theta0
    sq = float((d * d).sum())
    if RegularizerKind(kind) is RegularizerKind.QUADRATIC:
        return lam * sq, 2.0 * lam * d
    e = math.exp(sq)
    return lam * e, 2.0 * lam * e * d


def evaluate_loss(spec: LossSpec, params, prior, *, pairs=None, X=None, u=None, sampled_logp=None):
    """Dispatch on ``spec.kind``."""
    if spec.kind is LossKind.PL:
        return pl_loss(params, prior, pairs, spec.temperature)
    if spec.kind is LossKind.RPL:
        return rpl_loss(params, prior, pairs, spec.temperature, spec.p_flip)
    fn = fkl_loss if spec.kind is LossKind.FKL else bfkl_loss
    return fn(params, X, u, sampled_logp, prior, spec.use_importance_weights)
