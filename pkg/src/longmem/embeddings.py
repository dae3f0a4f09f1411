"""Symbol embeddings: table loading, sequence lookup, padding, chunking.

Maps discrete symbol sequences to real-valued multivariate series. Tables
are read from GloVe-style text files (`token v1 ... vp` per line). Out-of-
vocabulary symbols are handled by one of three policies: drop the position,
substitute the zero vector, or substitute the table's mean vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    EmbeddingParseError,
    EmptyInputError,
    LengthExceededError,
)

#: Marker for an out-of-vocabulary position in an id sequence.
OOV_ID = -1

Token = Union[int, str]


class OovPolicy(enum.Enum):
    """What to do with a symbol that has no row in the table."""

    SKIP = "skip"
    ZERO = "zero"
    MEAN = "mean"


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable mapping from symbol ids to vectors in R^p.

    `vectors` has one row per symbol; `mean_vector` caches the row mean.
    `token_ids` maps the original string tokens to row indices.
    """

    vectors: np.ndarray
    token_ids: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatchError(
                f"table must be a V x p matrix with V, p >= 1, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("embedding vectors must be finite")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "_mean", v.mean(axis=0))

    @property
    def vocab_size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def mean_vector(self) -> np.ndarray:
        return self._mean


@dataclass(frozen=True)
class SymbolSequence:
    """Ordered symbols: integer ids in [0, V), raw string tokens, or OOV_ID."""

    ids: tuple[Token, ...]

    def __init__(self, ids: Sequence[Token]):
        ids = tuple(ids)
        if not ids:
            raise EmptyInputError("symbol sequence must be non-empty")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class EmbeddedSeries:
    """A length-T, dimension-p real-valued series (rows are time steps)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionMismatchError(
                f"series must be a T x p matrix with T >= 1, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("series values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def load_table(source: Union[TextIO, Iterable[str]]) -> EmbeddingTable:
    """Parse a GloVe-style text stream into an EmbeddingTable.

    Each non-empty line is `token v1 ... vp` (whitespace separated). All
    lines must share the same p. Duplicate tokens keep the first occurrence.
    """
    token_ids: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim: int | None = None
    for line_number, line in enumerate(source, start=1):
        parts = line.split()
        if not parts:
            continue
        token, raw_values = parts[0], parts[1:]
        if not raw_values:
            raise EmbeddingParseError(line_number, f"no values after token {token!r}")
        try:
            values = np.array([float(x) for x in raw_values], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingParseError(line_number, str(exc)) from None
        if not np.all(np.isfinite(values)):
            raise EmbeddingParseError(line_number, "non-finite embedding value")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimensionMismatchError(
                f"line {line_number}: expected {dim} values, got {len(values)}"
            )
        if token in token_ids:
            continue  # first occurrence wins
        token_ids[token] = len(rows)
        rows.append(values)
    if not rows:
        raise EmptyInputError("embedding stream contains no rows")
    return EmbeddingTable(vectors=np.stack(rows), token_ids=token_ids)


def _resolve_id(table: EmbeddingTable, token: Token) -> int:
    """Map a raw token to a row index, or OOV_ID if absent."""
    if isinstance(token, str):
        return table.token_ids.get(token, OOV_ID)
    token = int(token)
    if token == OOV_ID:
        return OOV_ID
    if not 0 <= token < table.vocab_size:
        raise DomainError(
            f"symbol id {token} outside [0, {table.vocab_size}) and not the OOV marker"
        )
    return token


def lookup_sequence(
    table: EmbeddingTable, seq: SymbolSequence, policy: OovPolicy
) -> EmbeddedSeries:
    """Embed a symbol sequence, applying the OOV policy; order preserved."""
    rows: list[np.ndarray] = []
    for token in seq.ids:
        idx = _resolve_id(table, token)
        if idx != OOV_ID:
            rows.append(table.vectors[idx])
        elif policy is OovPolicy.SKIP:
            continue
        elif policy is OovPolicy.ZERO:
            rows.append(np.zeros(table.dim))
        else:
            rows.append(table.mean_vector)
    if not rows:
        raise EmptyInputError("all symbols were OOV under the skip policy")
    return EmbeddedSeries(values=np.stack(rows))


def pad_to_length(series: EmbeddedSeries, length: int) -> EmbeddedSeries:
    """Prepend all-zero rows so the series has exactly `length` rows."""
    if length < 1:
        raise DomainError(f"pad length must be positive, got {length}")
    if series.length > length:
        raise LengthExceededError(
            f"series length {series.length} exceeds pad length {length}; chunk first"
        )
    if series.length == length:
        return series
    pad = np.zeros((length - series.length, series.dim))
    return EmbeddedSeries(values=np.concatenate([pad, series.values], axis=0))


def chunk_corpus(tokens: Iterable[Token], chunk_len: int) -> list[SymbolSequence]:
    """Split a token stream into consecutive chunks of exactly `chunk_len`.

    A final partial chunk is dropped.
    """
    if chunk_len < 1:
        raise DomainError(f"chunk length must be positive, got {chunk_len}")
    chunks: list[SymbolSequence] = []
    buffer: list[Token] = []
    for token in tokens:
        buffer.append(token)
        if len(buffer) == chunk_len:
            chunks.append(SymbolSequence(buffer))
            buffer = []
    return chunks


def iter_corpus_tokens(stream: Union[TextIO, Iterable[str]]) -> Iterator[str]:
    """Yield whitespace-separated tokens from a line-oriented text stream."""
    for line in stream:
        yield from line.split()


def concat_features(series_list: Sequence[EmbeddedSeries]) -> EmbeddedSeries:
    """Concatenate series column-wise; all inputs must share the same length."""
    if not series_list:
        raise EmptyInputError("no series to concatenate")
    if len(series_list) == 1:
        return series_list[0]
    lengths = {s.length for s in series_list}
    if len(lengths) > 1:
        raise DimensionMismatchError(f"series lengths differ: {sorted(lengths)}")
    return EmbeddedSeries(values=np.concatenate([s.values for s in series_list], axis=1))
