"""Mean-field categorical proposal over fixed-length token sequences.

The proposal is an ``M x V`` logits matrix; position ``m`` draws its token from
``softmax(logits[m])`` independently of the others. Batch helpers take an
``(n, M)`` integer token array.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from genbo.errors import EmptyData, LengthMismatch


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


@dataclass
class MeanFieldParams:
    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)
        if self.logits.ndim != 2:
            raise ValueError("logits must be an M x V matrix")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")

    @property
    def seq_len(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]

    def probs(self) -> np.ndarray:
        return softmax(self.logits)

    def copy(self) -> "MeanFieldParams":
        return MeanFieldParams(self.logits.copy())

    def to_json(self) -> str:
        return json.dumps({"logits": self.logits.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "MeanFieldParams":
        return cls(np.array(json.loads(text)["logits"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "MeanFieldParams":
        return cls.from_json(Path(path).read_text())


def init_params(M: int, V: int, rng: np.random.Generator, scale: float = 0.01) -> MeanFieldParams:
    return MeanFieldParams(scale * rng.standard_normal((M, V)))


def _as_batch(X, M: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != M:
        raise LengthMismatch(f"expected length {M}, got {X.shape[1]}")
    return X


def log_prob_batch(params: MeanFieldParams, X) -> np.ndarray:
    lsm = log_softmax(params.logits)
    X = _as_batch(X, params.seq_len)
    return lsm[np.arange(params.seq_len)[None, :], X].sum(axis=1)


def log_prob(params: MeanFieldParams, seq) -> float:
    return float(log_prob_batch(params, seq)[0])


def sample(params: MeanFieldParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` i.i.d. sequences as a ``(count, M)`` token array.

    Inverse-CDF sampling on one uniform draw per position.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cdf = np.cumsum(params.probs(), axis=1)
    u = rng.random((count, params.seq_len))
    X = (u[:, :, None] >= cdf[None, :, :]).sum(axis=2)
    return np.minimum(X, params.vocab_size - 1)


def weighted_counts(X: np.ndarray, weights: np.ndarray, M: int, V: int) -> np.ndarray:
    """``C[m, v] = sum_i weights[i] * [X[i, m] == v]``."""
    idx = (np.arange(M)[None, :] * V + X).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float)[:, None], X.shape).ravel()
    return np.bincount(idx, weights=w, minlength=M * V).reshape(M, V)


def weighted_grad_log_prob(params: MeanFieldParams, X, weights) -> np.ndarray:
    """Gradient of ``sum_i weights[i] * log q(X[i])`` w.r.t. the logits."""
    X = _as_batch(X, params.seq_len)
    weights = np.asarray(weights, dtype=float)
    M, V = params.logits.shape
    return weighted_counts(X, weights, M, V) - weights.sum() * params.probs()


def grad_log_prob(params: MeanFieldParams, seq) -> np.ndarray:
    """Row m is ``onehot(seq[m]) - softmax(logits[m])``."""
    X = _as_batch(seq, params.seq_len)[0]
    grad = -params.probs()
    grad[np.arange(params.seq_len), X] += 1.0
    return grad


class UniformPrior:
    """``p0(x) = V ** -M``."""

    def __init__(self, seq_len: int, vocab_size: int):
        self.seq_len = seq_len
        self.vocab_size = vocab_size

    def log_prob_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.seq_len)
        return np.full(X.shape[0], -self.seq_len * math.log(self.vocab_size))

    def logits(self) -> np.ndarray:
        return np.zeros((self.seq_len, self.vocab_size))

    def __repr__(self):
        return f"UniformPrior(M={self.seq_len}, V={self.vocab_size})"


class CategoricalPrior:
    """Per-position categorical prior with strictly positive rows."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2 or np.any(probs <= 0):
            raise ValueError("prior probabilities must be a strictly positive M x V matrix")
        if not np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("prior rows must sum to 1")
        self.probs = probs
        self.seq_len, self.vocab_size = probs.shape
        self._log = np.log(probs)

    def log_prob_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.seq_len)
        return self._log[np.arange(self.seq_len)[None, :], X].sum(axis=1)

    def logits(self) -> np.ndarray:
        return self._log.copy()

    def __repr__(self):
        return f"CategoricalPrior(M={self.seq_len}, V={self.vocab_size})"


Prior = UniformPrior | CategoricalPrior


def prior_uniform(M: int, V: int) -> UniformPrior:
    return UniformPrior(M, V)


def prior_from_data(X, vocab_size: int, alpha: float = 1.0) -> CategoricalPrior:
    """Smoothed per-position frequencies ``(count + alpha) / (n + alpha * V)``.

    ``X`` is a token array or a Dataset. With ``alpha == 0`` every symbol must
    appear at every position, or the prior would not be strictly positive.
    """
    if hasattr(X, "tokens"):
        X = X.tokens()
    X = np.asarray(X, dtype=np.int64)
    if X.size == 0:
        raise EmptyData("cannot fit a prior to no data")
    n, M = X.shape
    counts = weighted_counts(X, np.ones(n), M, vocab_size)
    return CategoricalPrior((counts + alpha) / (n + alpha * vocab_size))


def prior_log_prob(prior: Prior, seq) -> float:
    return float(prior.log_prob_batch(seq)[0])
