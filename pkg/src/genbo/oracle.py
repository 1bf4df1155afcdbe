"""Exhaustive ground truth on small domains: enumeration, exact targets, TV distance."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from genbo.acquisition import UtilityKind, utility
from genbo.errors import AllZeroMass, DomainTooLarge
from genbo.proposal import MeanFieldParams, UniformPrior, log_prob_batch

MAX_DOMAIN = 10**6


class TargetMode(str, Enum):
    KL = "KL"
    PREFERENCE = "Preference"


@dataclass
class ExactDistribution:
    """Probabilities over every sequence, rows of ``domain`` in lexicographic order."""

    domain: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError("probabilities must sum to 1")

    def as_dict(self) -> dict:
        return {tuple(row.tolist()): float(p) for row, p in zip(self.domain, self.probs)}


def enumerate_domain(M: int, V: int) -> np.ndarray:
    """All ``V ** M`` sequences as an ``(V**M, M)`` array, lexicographic order."""
    if V**M > MAX_DOMAIN:
        raise DomainTooLarge(f"domain of size {V}^{M} exceeds {MAX_DOMAIN}")
    return np.array(list(itertools.product(range(V), repeat=M)), dtype=np.int64).reshape(V**M, M)


def _task_shape(task):
    V = task.vocab_size if hasattr(task, "vocab_size") else task.vocab.size
    return task.seq_len, V


def objective_table(task) -> tuple[np.ndarray, np.ndarray]:
    M, V = _task_shape(task)
    domain = enumerate_domain(M, V)
    return domain, np.array([task.evaluate(row) for row in domain], dtype=float)


def exact_target(task, kind, thr: float, prior=None, temperature: float = 1.0,
                 mode: TargetMode | str = TargetMode.KL, sharpness: float = 1.0) -> ExactDistribution:
    """Utility-tilted prior on the full domain.

    KL mode: ``p0(x) * u(f(x))``. Preference mode: ``p0(x) * exp(u(f(x)) / temperature)``.
    """
    mode = TargetMode(mode)
    domain, fvals = objective_table(task)
    if prior is None:
        prior = UniformPrior(*_task_shape(task))
    u = np.asarray(utility(fvals, thr, UtilityKind(kind), sharpness), dtype=float)
    logp0 = prior.log_prob_batch(domain)
    if mode is TargetMode.KL:
        if np.any(u < 0):
            raise ValueError("KL-mode target needs a nonnegative utility")
        w = np.exp(logp0) * u
        if w.sum() <= 0:
            raise AllZeroMass("utility vanishes on the whole domain")
        return ExactDistribution(domain, w / w.sum())
    logw = logp0 + u / temperature
    logw -= logw.max()
    w = np.exp(logw)
    return ExactDistribution(domain, w / w.sum())


def tv_distance(p: ExactDistribution, q_params: MeanFieldParams | ExactDistribution) -> float:
    if isinstance(q_params, ExactDistribution):
        if not np.array_equal(p.domain, q_params.domain):
            raise ValueError("distributions live on different domains")
        q = q_params.probs
    else:
        q = np.exp(log_prob_batch(q_params, p.domain))
    return 0.5 * float(np.abs(p.probs - q).sum())


def exhaustive_argmax(task) -> tuple[tuple[int, ...], float]:
    """Lexicographically first maximizer and the maximum value."""
    domain, fvals = objective_table(task)
    i = int(np.argmax(fvals))
    return tuple(domain[i].tolist()), float(fvals[i])
