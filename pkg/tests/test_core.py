import math

import numpy as np
import pytest

from genbo.core import (
    AMINO_ACIDS,
    ENGLISH_UPPER,
    Dataset,
    Observation,
    Vocab,
    generic_vocab,
    rng_stream,
    seq_from_string,
    seq_to_string,
)
from genbo.errors import EmptySequence, LengthMismatch, UnknownSymbol


def test_vocab_roundtrip():
    v = Vocab(ENGLISH_UPPER)
    seq = seq_from_string("ALOHA", v)
    assert seq == (0, 11, 14, 7, 0)
    assert seq_to_string(seq, v) == "ALOHA"


def test_amino_vocab_has_twenty_symbols():
    assert Vocab(AMINO_ACIDS).size == 20


def test_alphabetical_sorts():
    assert Vocab.alphabetical("CBA").symbols == "ABC"


@pytest.mark.parametrize("symbols", ["A", "AA", "".join(chr(40 + i) for i in range(65))])
def test_vocab_rejects_bad_symbol_sets(symbols):
    with pytest.raises(ValueError):
        Vocab(symbols)


def test_unknown_symbol_reports_position():
    with pytest.raises(UnknownSymbol) as info:
        seq_from_string("AL0HA", Vocab(ENGLISH_UPPER))
    assert info.value.position == 2
    assert info.value.symbol == "0"


def test_empty_and_length_errors():
    v = Vocab(ENGLISH_UPPER)
    with pytest.raises(EmptySequence):
        seq_from_string("", v)
    with pytest.raises(LengthMismatch):
        seq_from_string("ALOH", v, length=5)


def test_generic_vocab():
    assert generic_vocab(4).size == 4


def test_rng_streams_are_reproducible_and_distinct():
    a = rng_stream(3, "train", 1).random(5)
    assert np.array_equal(a, rng_stream(3, "train", 1).random(5))
    assert not np.array_equal(a, rng_stream(3, "train", 2).random(5))
    assert not np.array_equal(a, rng_stream(3, "sample", 1).random(5))
    assert not np.array_equal(a, rng_stream(4, "train", 1).random(5))


def test_observation_rejects_nan_logp():
    with pytest.raises(ValueError):
        Observation((0, 1), 1.0, 0, math.nan)


def test_dataset_bookkeeping():
    ds = Dataset(seq_len=2)
    ds.extend([Observation((0, 1), -2.0, 0, -1.0), Observation((1, 1), -1.0, 0, -1.0)])
    ds.append(Observation((1, 0), -3.0, 1, -0.5))
    assert len(ds) == 3
    assert ds.initial_size == 2
    assert ds.best_y == -1.0
    assert ds.last_round() == 1
    assert ds.tokens(1).tolist() == [[1, 0]]
    assert ds.ys([0]).tolist() == [-2.0, -1.0]
    assert ds.proposal_logps().tolist() == [-1.0, -1.0, -0.5]
    assert ds.tokens(5).shape == (0, 2)


def test_dataset_rejects_out_of_order_and_bad_length():
    ds = Dataset(seq_len=2)
    ds.append(Observation((0, 1), 0.0, 2, 0.0))
    with pytest.raises(ValueError):
        ds.append(Observation((0, 1), 0.0, 1, 0.0))
    with pytest.raises(LengthMismatch):
        ds.append(Observation((0, 1, 1), 0.0, 2, 0.0))
