"""Black-box objectives: ALOHA edit distance, Ehrlich holo functions, noise wrapper.

Every task is a maximization problem exposing ``seq_len``, ``vocab``,
``f_star`` and ``evaluate(tokens) -> float``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from genbo.core import (
    AMINO_ACIDS,
    ENGLISH_UPPER,
    Seq,
    Vocab,
    generic_vocab,
    seq_from_string,
    seq_to_string,
)
from genbo.errors import ConstructionFailed, LengthMismatch

MAX_GAP = 2


def levenshtein(a, b) -> int:
    """Unit-cost insert/delete/substitute distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _check_tokens(tokens, seq_len: int, vocab_size: int) -> Seq:
    tokens = tuple(int(t) for t in tokens)
    if len(tokens) != seq_len:
        raise LengthMismatch(f"expected length {seq_len}, got {len(tokens)}")
    if any(t < 0 or t >= vocab_size for t in tokens):
        raise ValueError(f"token out of range for vocab of size {vocab_size}")
    return tokens


@dataclass(frozen=True)
class AlohaTask:
    """Maximize ``-levenshtein(x, target)`` over fixed-length strings."""

    target: str = "ALOHA"
    vocab: Vocab = field(default_factory=lambda: Vocab(ENGLISH_UPPER))

    def __post_init__(self):
        object.__setattr__(self, "_target", seq_from_string(self.target, self.vocab))

    @property
    def seq_len(self) -> int:
        return len(self.target)

    @property
    def f_star(self) -> float:
        return 0.0

    def distance(self, tokens) -> int:
        return levenshtein(_check_tokens(tokens, self.seq_len, self.vocab.size), self._target)

    def evaluate(self, tokens) -> float:
        return -float(self.distance(tokens))


def aloha_eval(seq, task: AlohaTask | None = None) -> float:
    return (task or AlohaTask()).evaluate(seq)


@dataclass(frozen=True)
class CallableTask:
    """Wraps an arbitrary objective over ``vocab_size ** seq_len`` token sequences."""

    fn: Callable[[Seq], float]
    seq_len: int
    vocab_size: int
    f_star: float = math.nan

    @property
    def vocab(self) -> Vocab:
        return generic_vocab(self.vocab_size)

    def evaluate(self, tokens) -> float:
        return float(self.fn(_check_tokens(tokens, self.seq_len, self.vocab_size)))


@dataclass(frozen=True)
class Motif:
    elements: tuple[int, ...]
    gaps: tuple[int, ...]

    @property
    def offsets(self) -> tuple[int, ...]:
        return (0, *np.cumsum(self.gaps, dtype=int).tolist())

    @property
    def span(self) -> int:
        return 1 + sum(self.gaps)


@dataclass(frozen=True)
class EhrlichFunction:
    """Closed-form epistatic objective with banned transitions.

    ``transition_mask[a, b]`` is True when token ``b`` may follow token ``a``.
    Sequences with a banned adjacent pair score -1; feasible sequences score
    the product over motifs of the quantized best-alignment match fraction.
    """

    seq_len: int
    transition_mask: np.ndarray
    motifs: tuple[Motif, ...]
    quantization: int
    certificate: Seq
    vocab: Vocab = field(default_factory=lambda: Vocab(AMINO_ACIDS))

    infeasible_value = -1.0

    @property
    def f_star(self) -> float:
        return 1.0

    @property
    def vocab_size(self) -> int:
        return self.transition_mask.shape[0]

    @property
    def motif_length(self) -> int:
        return len(self.motifs[0].elements)

    def is_feasible(self, tokens) -> bool:
        t = np.asarray(tokens, dtype=np.int64)
        if t.size < 2:
            return True
        return bool(self.transition_mask[t[:-1], t[1:]].all())

    def motif_presence(self, tokens) -> list[float]:
        """Quantized best-alignment match fraction per motif."""
        t = np.asarray(tokens, dtype=np.int64)
        q = self.quantization
        out = []
        for motif in self.motifs:
            offs = np.array(motif.offsets)
            starts = np.arange(self.seq_len - offs[-1])
            window = t[starts[:, None] + offs[None, :]]
            best = int((window == np.array(motif.elements)[None, :]).sum(axis=1).max())
            L = len(motif.elements)
            out.append(((q * best) // L) / q)
        return out

    def evaluate(self, tokens) -> float:
        tokens = _check_tokens(tokens, self.seq_len, self.vocab_size)
        if not self.is_feasible(tokens):
            return self.infeasible_value
        return float(np.prod(self.motif_presence(tokens)))

    def to_dict(self) -> dict:
        return {
            "seq_len": self.seq_len,
            "vocab": self.vocab.symbols,
            "quantization": self.quantization,
            "transition_mask": self.transition_mask.astype(int).tolist(),
            "motifs": [{"elements": list(m.elements), "gaps": list(m.gaps)} for m in self.motifs],
            "certificate": list(self.certificate),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EhrlichFunction":
        return cls(
            seq_len=int(d["seq_len"]),
            transition_mask=np.array(d["transition_mask"], dtype=bool),
            motifs=tuple(Motif(tuple(m["elements"]), tuple(m["gaps"])) for m in d["motifs"]),
            quantization=int(d["quantization"]),
            certificate=tuple(d["certificate"]),
            vocab=Vocab(d["vocab"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "EhrlichFunction":
        return cls.from_dict(json.loads(Path(path).read_text()))


def ehrlich_eval(fx: EhrlichFunction, seq) -> float:
    return fx.evaluate(seq)


def _sample_mask(V: int, rng: np.random.Generator, ban_prob: float) -> np.ndarray:
    mask = rng.random((V, V)) >= ban_prob
    np.fill_diagonal(mask, True)
    # a random Hamiltonian cycle keeps the transition digraph strongly connected
    order = rng.permutation(V)
    mask[order, np.roll(order, -1)] = True
    return mask


def _fill_certificate(mask, fixed, rng) -> Seq | None:
    """Random feasible sequence honouring ``fixed`` (-1 = free), or None."""
    M, V = len(fixed), mask.shape[0]
    allowed = np.ones((M, V), dtype=bool)
    for p, tok in enumerate(fixed):
        if tok >= 0:
            allowed[p] = False
            allowed[p, tok] = True
    reach = np.zeros((M, V), dtype=bool)
    reach[0] = allowed[0]
    for p in range(1, M):
        reach[p] = (reach[p - 1][:, None] & mask).any(axis=0) & allowed[p]
        if not reach[p].any():
            return None
    seq = [int(rng.choice(np.flatnonzero(reach[-1])))]
    for p in range(M - 2, -1, -1):
        cands = np.flatnonzero(reach[p] & mask[:, seq[-1]])
        seq.append(int(rng.choice(cands)))
    return tuple(reversed(seq))


def ehrlich_new(
    M: int,
    K: int,
    L: int,
    q: int,
    rng: np.random.Generator,
    vocab_size: int = 20,
    ban_prob: float = 0.25,
    max_retries: int = 1000,
) -> EhrlichFunction:
    """Sample an Ehrlich instance with a verified value-1 certificate.

    Motif gaps are drawn from ``{1, .., MAX_GAP}``. Raises ConstructionFailed when
    the motifs cannot fit in ``M`` or no certificate is found within the budget.
    """
    if K < 1 or L < 2 or q < 1 or q > L or L % q:
        raise ConstructionFailed(f"invalid motif settings K={K}, L={L}, q={q}")
    if M < K * (L + MAX_GAP):
        raise ConstructionFailed(f"{K} motifs of length {L} cannot fit in length {M}")
    if L > vocab_size:
        raise ConstructionFailed("motif length exceeds vocab size")
    vocab = Vocab(AMINO_ACIDS) if vocab_size == 20 else generic_vocab(vocab_size)
    for _ in range(max_retries):
        mask = _sample_mask(vocab_size, rng, ban_prob)
        motifs = tuple(
            Motif(
                tuple(int(v) for v in rng.choice(vocab_size, size=L, replace=False)),
                tuple(int(g) for g in rng.integers(1, MAX_GAP + 1, size=L - 1)),
            )
            for _ in range(K)
        )
        slack = M - sum(m.span for m in motifs)
        if slack < 0:
            continue
        # spread the slack randomly in front of each motif and at the tail
        pads = rng.multinomial(slack, np.full(K + 1, 1.0 / (K + 1)))
        fixed = [-1] * M
        pos = 0
        for motif, pad in zip(motifs, pads):
            pos += int(pad)
            for off, tok in zip(motif.offsets, motif.elements):
                fixed[pos + off] = tok
            pos += motif.span
        cert = _fill_certificate(mask, fixed, rng)
        if cert is None:
            continue
        fx = EhrlichFunction(M, mask, motifs, q, cert, vocab)
        if fx.evaluate(cert) == 1.0:
            return fx
    raise ConstructionFailed(f"no feasible certificate after {max_retries} attempts")


@dataclass(frozen=True)
class BlackBox:
    """Noisy observation wrapper ``y = f(x) + eps``, ``eps ~ N(0, noise_sigma^2)``."""

    task: object
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @property
    def f_star(self) -> float:
        return self.task.f_star

    def observe(self, seq, rng: np.random.Generator | None = None) -> float:
        value = self.task.evaluate(seq)
        if self.noise_sigma == 0:
            return value
        return value + self.noise_sigma * float(rng.standard_normal())


def observe(bb: BlackBox, seq, rng=None) -> float:
    return bb.observe(seq, rng)


def decode(task, tokens) -> str:
    return seq_to_string(tokens, task.vocab)
