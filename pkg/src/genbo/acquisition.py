"""Utility functions of observations and the annealed improvement threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from genbo.errors import EmptyData


class UtilityKind(str, Enum):
    PI = "PI"
    EI = "EI"
    SEI = "sEI"
    SR = "SR"

    @property
    def nonnegative(self) -> bool:
        return self is not UtilityKind.SR


@dataclass(frozen=True)
class ThresholdSchedule:
    T: int
    p_start: float = 0.5
    p_end: float = 0.99

    def __post_init__(self):
        if not 0 < self.p_start <= self.p_end < 1:
            raise ValueError("need 0 < p_start <= p_end < 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")


def utility(y, thr: float, kind: UtilityKind | str, sharpness: float = 1.0):
    """Utility of observation(s) ``y`` against threshold ``thr``.

    Works elementwise on arrays. ``thr`` is ignored for SR.
    """
    kind = UtilityKind(kind)
    y = np.asarray(y, dtype=float)
    if kind is UtilityKind.PI:
        out = (y >= thr).astype(float)
    elif kind is UtilityKind.EI:
        out = np.maximum(y - thr, 0.0)
    elif kind is UtilityKind.SEI:
        out = np.logaddexp(0.0, sharpness * (y - thr)) / sharpness
    else:
        out = y.copy()
    return out if out.ndim else float(out)


def anneal_percentile(t: int, sched: ThresholdSchedule) -> float:
    if not 0 <= t <= sched.T:
        raise ValueError(f"round {t} outside [0, {sched.T}]")
    if t == sched.T:
        return sched.p_end
    return sched.p_start + (sched.p_end - sched.p_start) * t / sched.T


def empirical_quantile(ys, p: float) -> float:
    """Lower quantile: the sorted element at index floor(p * (n - 1))."""
    ys = np.sort(np.asarray(ys, dtype=float))
    if ys.size == 0:
        raise EmptyData("quantile of empty data")
    return float(ys[int(math.floor(p * (ys.size - 1)))])


def compute_threshold(dataset, t: int, sched: ThresholdSchedule, sentinel: float | None = None) -> float:
    """Annealed quantile of all observed y.

    Observations equal to ``sentinel`` (the infeasible marker of constrained
    tasks) are left out as long as at least one other observation exists.
    """
    ys = np.asarray(dataset.ys() if hasattr(dataset, "ys") else dataset, dtype=float)
    if sentinel is not None:
        kept = ys[ys != sentinel]
        if kept.size:
            ys = kept
    return empirical_quantile(ys, anneal_percentile(t, sched))
