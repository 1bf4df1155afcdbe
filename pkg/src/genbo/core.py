"""Shared domain types: vocabularies, token sequences, observation logs and RNG streams."""

from __future__ import annotations

import math
import string
import zlib
from dataclasses import dataclass, field

import numpy as np

from genbo.errors import EmptySequence, LengthMismatch, UnknownSymbol

# A design point: token indices into a Vocab, fixed length per task.
Seq = tuple[int, ...]

ENGLISH_UPPER = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
_GENERIC = string.ascii_lowercase + string.ascii_uppercase + string.digits + "+/"


@dataclass(frozen=True)
class Vocab:
    """Ordered set of single-character symbols; index i <-> symbols[i]."""

    symbols: str

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbols in vocab {self.symbols!r}")
        if not 2 <= len(self.symbols) <= 64:
            raise ValueError(f"vocab size must be in [2, 64], got {len(self.symbols)}")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @classmethod
    def alphabetical(cls, symbols: str) -> "Vocab":
        return cls("".join(sorted(symbols)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index


def generic_vocab(size: int) -> Vocab:
    """Placeholder symbols ``a, b, c, ..`` for synthetic tasks."""
    return Vocab(_GENERIC[:size])


def seq_from_string(s: str, vocab: Vocab, length: int | None = None) -> Seq:
    """Encode ``s`` as token indices; ``length`` enforces the task's M."""
    if not s and (length is None or length > 0):
        raise EmptySequence("empty sequence")
    if length is not None and len(s) != length:
        raise LengthMismatch(f"expected length {length}, got {len(s)}")
    tokens = []
    for pos, ch in enumerate(s):
        if ch not in vocab:
            raise UnknownSymbol(pos, ch)
        tokens.append(vocab.index(ch))
    return tuple(tokens)


def seq_to_string(seq, vocab: Vocab) -> str:
    return "".join(vocab.symbols[int(t)] for t in seq)


def rng_stream(master_seed: int, purpose_tag: str, index: int = 0) -> np.random.Generator:
    """Independent Philox stream keyed on (seed, tag, index).

    Streams used by the engine: ``("task", 0)``, ``("init", 0)`` for the initial
    data, ``("init", 1)`` for the anchor logits, then per round t
    ``("train", t)``, ``("sample", t)`` and ``("noise", t)``.
    """
    tag_key = zlib.crc32(purpose_tag.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(tag_key, int(index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Observation:
    tokens: Seq
    y: float
    round: int
    proposal_logp: float

    def __post_init__(self):
        if math.isnan(self.proposal_logp):
            raise ValueError("proposal_logp must not be NaN")


@dataclass
class Dataset:
    """Append-only log of observations.

    ``initial_size`` counts the round-0 records. ``best_y`` is maintained
    incrementally on append.
    """

    seq_len: int
    _records: list[Observation] = field(default_factory=list)
    initial_size: int = 0
    best_y: float = -math.inf

    def append(self, obs: Observation) -> None:
        if len(obs.tokens) != self.seq_len:
            raise LengthMismatch(f"expected length {self.seq_len}, got {len(obs.tokens)}")
        if self._records and obs.round < self._records[-1].round:
            raise ValueError("observations must be appended in round order")
        self._records.append(obs)
        if obs.round == 0:
            self.initial_size += 1
        if obs.y > self.best_y:
            self.best_y = obs.y

    def extend(self, observations) -> None:
        for obs in observations:
            self.append(obs)

    @property
    def records(self) -> tuple[Observation, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def tokens(self, rounds=None) -> np.ndarray:
        recs = self._select(rounds)
        if not recs:
            return np.zeros((0, self.seq_len), dtype=np.int64)
        return np.array([r.tokens for r in recs], dtype=np.int64)

    def ys(self, rounds=None) -> np.ndarray:
        return np.array([r.y for r in self._select(rounds)], dtype=float)

    def proposal_logps(self, rounds=None) -> np.ndarray:
        return np.array([r.proposal_logp for r in self._select(rounds)], dtype=float)

    def last_round(self) -> int:
        return self._records[-1].round if self._records else 0

    def _select(self, rounds):
        if rounds is None:
            return self._records
        rounds = {rounds} if isinstance(rounds, int) else set(rounds)
        return [r for r in self._records if r.round in rounds]


@dataclass(frozen=True)
class RoundRecord:
    round: int
    threshold: float
    best_y: float
    simple_regret: float
    batch_mean_u: float
    final_loss: float
    n_evals: int
