"""Real-input DFT, per-dimension periodograms, and periodogram averaging.

The forward transform is unnormalized (no 1/L factor): log-log slope
estimates are invariant to multiplicative scaling, so normalization would
only shift the regression intercept. The fast path requires power-of-two
lengths; `dft_naive` is the O(L^2) oracle used to verify it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .embeddings import EmbeddedSeries
from .errors import DimensionMismatchError, DomainError, EmptyInputError, SpectralLengthError


@dataclass(frozen=True)
class ComplexSpectrum:
    """DFT bins k = 0..floor(L/2) of a length-L real signal."""

    length: int
    bins: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.shape != (self.length // 2 + 1,):
            raise DimensionMismatchError(
                f"expected {self.length // 2 + 1} bins for length {self.length}, "
                f"got {bins.shape}"
            )
        object.__setattr__(self, "bins", bins)


@dataclass(frozen=True)
class Periodogram:
    """Squared-magnitude spectrum per dimension over indices k = 1..L/2.

    The DC bin (k = 0) is removed; the Nyquist bin is retained. `power`
    is an (L/2) x p matrix.
    """

    length: int
    power: np.ndarray

    def __post_init__(self):
        power = np.asarray(self.power, dtype=np.float64)
        if power.ndim != 2 or power.shape[0] != self.length // 2:
            raise DimensionMismatchError(
                f"expected {self.length // 2} x p power matrix for length "
                f"{self.length}, got shape {power.shape}"
            )
        if np.any(power < 0):
            raise DomainError("periodogram power must be non-negative")
        object.__setattr__(self, "power", power)

    @property
    def dim(self) -> int:
        return self.power.shape[1]

    @property
    def freq_indices(self) -> np.ndarray:
        return np.arange(1, self.length // 2 + 1)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def dft_naive(signal: np.ndarray) -> ComplexSpectrum:
    """O(L^2) reference DFT: bin k = sum_t x_t exp(-2*pi*i*k*t/L)."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise DomainError("signal must be a non-empty 1-d real vector")
    length = x.size
    ks = np.arange(length // 2 + 1)
    ts = np.arange(length)
    kernel = np.exp(-2j * np.pi * np.outer(ks, ts) / length)
    return ComplexSpectrum(length=length, bins=kernel @ x)


def rfft(signal: np.ndarray) -> ComplexSpectrum:
    """Fast real-input DFT; the length must be a power of two."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise DomainError("signal must be a non-empty 1-d real vector")
    if not _is_power_of_two(x.size):
        raise SpectralLengthError(
            f"length {x.size} is not a power of two; pad the input first"
        )
    return ComplexSpectrum(length=x.size, bins=np.fft.rfft(x))


def periodogram(series: EmbeddedSeries) -> Periodogram:
    """Per-dimension squared magnitudes at k = 1..L/2 (DC removed)."""
    length = series.length
    if not _is_power_of_two(length):
        raise SpectralLengthError(
            f"series length {length} is not a power of two; pad the series first"
        )
    spectrum = np.fft.rfft(series.values, axis=0)
    return Periodogram(length=length, power=np.abs(spectrum[1:]) ** 2)


def average_periodograms(pgs: Sequence[Periodogram]) -> Periodogram:
    """Element-wise arithmetic mean of periodograms sharing L and p."""
    if not pgs:
        raise EmptyInputError("no periodograms to average")
    first = pgs[0]
    for pg in pgs[1:]:
        if pg.length != first.length or pg.power.shape != first.power.shape:
            raise DimensionMismatchError(
                f"periodogram shapes differ: {first.power.shape} (L={first.length}) "
                f"vs {pg.power.shape} (L={pg.length})"
            )
    mean = np.mean([pg.power for pg in pgs], axis=0)
    return Periodogram(length=first.length, power=mean)


def write_periodogram_csv(pg: Periodogram, stream: TextIO) -> None:
    """Dump a periodogram as CSV with header `k,dim0,...,dim{p-1}`."""
    header = "k," + ",".join(f"dim{j}" for j in range(pg.dim))
    stream.write(header + "\n")
    for k, row in zip(pg.freq_indices, pg.power):
        stream.write(f"{k}," + ",".join(repr(float(v)) for v in row) + "\n")
