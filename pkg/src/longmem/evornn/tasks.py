"""Synthetic symbol tasks with controllable dependence range.

The lag-recall task emits uniform random sequences whose labels are copies
of earlier positions: each of the H+1 labels is the symbol at distance
L - tau from the start, with tau drawn from a truncated power law on
[1, L-1]. Small tail exponents spread the lags out (long memory needed);
as the exponent grows the distribution collapses onto lag 1.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from ..embeddings import SymbolSequence
from ..errors import DomainError


def lag_distribution(seq_len: int, tail_exponent: float) -> np.ndarray:
    """P(tau) proportional to tau^(-a) over tau = 1..L-1.

    An infinite exponent collapses exactly onto tau = 1 (1^-inf = 1, the
    rest underflow to 0).
    """
    if seq_len < 2:
        raise DomainError(f"sequence length must be >= 2, got {seq_len}")
    taus = np.arange(1, seq_len, dtype=np.float64)
    weights = taus ** (-tail_exponent)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise DomainError(f"tail exponent {tail_exponent} gives no valid distribution")
    return weights / total


def task_lag_recall(
    vocab_size: int,
    seq_len: int,
    tail_exponent: float = 2.0,
    seed: int = 0,
    horizon: int = 0,
) -> Iterator[tuple[SymbolSequence, Sequence[int]]]:
    """Endless stream of (sequence, labels) pairs, deterministic per seed.

    Labels always appear in the input: label j is sequence position
    L - tau_j with tau_j in [1, L-1].
    """
    if vocab_size < 2:
        raise DomainError(f"vocab size must be >= 2, got {vocab_size}")
    if horizon < 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    probabilities = lag_distribution(seq_len, tail_exponent)
    taus = np.arange(1, seq_len)
    rng = np.random.default_rng(seed)
    while True:
        ids = rng.integers(0, vocab_size, size=seq_len)
        lags = rng.choice(taus, size=horizon + 1, p=probabilities)
        labels = [int(ids[seq_len - tau]) for tau in lags]
        yield SymbolSequence(ids=[int(i) for i in ids]), labels
