"""Embedding table parsing, lookup, padding, and chunking."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longmem.embeddings import (
    OOV_ID,
    EmbeddedSeries,
    EmbeddingTable,
    OovPolicy,
    SymbolSequence,
    chunk_corpus,
    concat_features,
    iter_corpus_tokens,
    load_table,
    lookup_sequence,
    pad_to_length,
)
from longmem.errors import (
    DimensionMismatchError,
    DomainError,
    EmbeddingParseError,
    EmptyInputError,
    LengthExceededError,
)

TWO_LINE = "the 0.1 0.2 0.3\ncat -1.0 0.0 1.0\n"


def test_load_table_basic():
    table = load_table(io.StringIO(TWO_LINE))
    assert table.vocab_size == 2
    assert table.dim == 3
    assert table.token_ids == {"the": 0, "cat": 1}
    assert np.array_equal(table.vectors[1], [-1.0, 0.0, 1.0])


def test_load_table_mean_vector():
    table = load_table(io.StringIO(TWO_LINE))
    assert np.allclose(table.mean_vector, [-0.45, 0.1, 0.65])


def test_load_table_duplicate_keeps_first():
    table = load_table(io.StringIO("a 1 2\na 3 4\nb 5 6\n"))
    assert table.vocab_size == 2
    assert np.array_equal(table.vectors[table.token_ids["a"]], [1.0, 2.0])


def test_load_table_parse_error_names_line():
    with pytest.raises(EmbeddingParseError) as exc:
        load_table(io.StringIO("a 1 2\nb 3 oops\n"))
    assert exc.value.line_number == 2


def test_load_table_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        load_table(io.StringIO("a 1 2\nb 3\n"))


def test_load_table_empty():
    with pytest.raises(EmptyInputError):
        load_table(io.StringIO("\n\n"))


def test_load_table_rejects_non_finite():
    with pytest.raises(EmbeddingParseError):
        load_table(io.StringIO("a 1 inf\n"))


def test_lookup_by_token_and_id():
    table = load_table(io.StringIO(TWO_LINE))
    by_token = lookup_sequence(table, SymbolSequence(["the", "cat"]), OovPolicy.ZERO)
    by_id = lookup_sequence(table, SymbolSequence([0, 1]), OovPolicy.ZERO)
    assert np.array_equal(by_token.values, by_id.values)
    assert by_token.length == 2 and by_token.dim == 3


def test_lookup_oov_policies():
    table = load_table(io.StringIO(TWO_LINE))
    seq = SymbolSequence(["the", "dog", "cat"])
    skipped = lookup_sequence(table, seq, OovPolicy.SKIP)
    assert skipped.length == 2
    zeroed = lookup_sequence(table, seq, OovPolicy.ZERO)
    assert zeroed.length == 3
    assert np.array_equal(zeroed.values[1], np.zeros(3))
    meaned = lookup_sequence(table, seq, OovPolicy.MEAN)
    assert np.allclose(meaned.values[1], table.mean_vector)


def test_lookup_all_oov_skip_errors():
    table = load_table(io.StringIO(TWO_LINE))
    with pytest.raises(EmptyInputError):
        lookup_sequence(table, SymbolSequence(["dog", "fish"]), OovPolicy.SKIP)


def test_lookup_oov_marker_id():
    table = load_table(io.StringIO(TWO_LINE))
    out = lookup_sequence(table, SymbolSequence([0, OOV_ID]), OovPolicy.ZERO)
    assert np.array_equal(out.values[1], np.zeros(3))


def test_lookup_rejects_out_of_range_id():
    table = load_table(io.StringIO(TWO_LINE))
    with pytest.raises(DomainError):
        lookup_sequence(table, SymbolSequence([0, 2]), OovPolicy.ZERO)


def test_symbol_sequence_non_empty():
    with pytest.raises(EmptyInputError):
        SymbolSequence([])


def test_embedded_series_rejects_non_finite():
    with pytest.raises(DomainError):
        EmbeddedSeries(np.array([[1.0, np.nan]]))


def test_pad_to_length_prepends_zeros():
    series = EmbeddedSeries(np.arange(6.0).reshape(3, 2))
    padded = pad_to_length(series, 5)
    assert padded.length == 5
    assert np.array_equal(padded.values[:2], np.zeros((2, 2)))
    assert np.array_equal(padded.values[2:], series.values)


def test_pad_to_length_noop_when_equal():
    series = EmbeddedSeries(np.ones((4, 1)))
    assert pad_to_length(series, 4) is series


def test_pad_to_length_rejects_longer_series():
    series = EmbeddedSeries(np.ones((5, 1)))
    with pytest.raises(LengthExceededError):
        pad_to_length(series, 4)


def test_chunk_corpus_drops_partial_tail():
    chunks = chunk_corpus(range(5000), 2048)
    assert len(chunks) == 2
    assert all(len(c) == 2048 for c in chunks)
    assert chunks[0].ids[0] == 0
    assert chunks[1].ids[-1] == 4095


def test_chunk_corpus_exact_multiple():
    chunks = chunk_corpus(range(6), 3)
    assert [c.ids for c in chunks] == [(0, 1, 2), (3, 4, 5)]


@given(st.lists(st.integers(0, 9), min_size=0, max_size=200), st.integers(1, 17))
def test_chunk_corpus_concatenation_is_prefix(tokens, chunk_len):
    chunks = chunk_corpus(tokens, chunk_len)
    flattened = [t for c in chunks for t in c.ids]
    kept = len(tokens) - len(tokens) % chunk_len
    assert flattened == tokens[:kept]


def test_iter_corpus_tokens():
    stream = io.StringIO("a b c\n\nd  e\n")
    assert list(iter_corpus_tokens(stream)) == ["a", "b", "c", "d", "e"]


def test_concat_features():
    a = EmbeddedSeries(np.ones((3, 2)))
    b = EmbeddedSeries(np.zeros((3, 1)))
    merged = concat_features([a, b])
    assert merged.dim == 3
    assert np.array_equal(merged.values[:, :2], a.values)


def test_concat_features_single_passthrough():
    a = EmbeddedSeries(np.ones((3, 2)))
    assert concat_features([a]) is a


def test_concat_features_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        concat_features([EmbeddedSeries(np.ones((3, 1))), EmbeddedSeries(np.ones((4, 1)))])


@settings(max_examples=50)
@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=20))
def test_lookup_preserves_order_under_zero_policy(tokens):
    table = EmbeddingTable(
        vectors=np.array([[1.0], [2.0], [3.0], [4.0]]),
        token_ids={"a": 0, "b": 1, "c": 2, "d": 3},
    )
    out = lookup_sequence(table, SymbolSequence(tokens), OovPolicy.ZERO)
    expected = [table.vectors[table.token_ids[t]][0] for t in tokens]
    assert out.values[:, 0].tolist() == expected
