"""Memory-coefficient estimation by log-periodogram regression.

For a series whose spectral density behaves like lambda^(-2d) near zero
frequency, the log periodogram is affine in log frequency with slope -2d.
Each embedding dimension is fitted independently by ordinary least squares,
and the returned coefficient is -slope/2. Estimates are reported as-is:
values outside (0, 1/2) indicate estimation failure and are not clamped.

Also provides the Hurst conversion H = d + 1/2, Gaussian mutual information
from covariance blocks, and the mutual-information decay-slope diagnostic
(log MI against log lag has slope 2(2d - 1) for long-memory Gaussians).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import special

from .embeddings import EmbeddingTable, OovPolicy, SymbolSequence, lookup_sequence, pad_to_length
from .errors import DegenerateInputError, DomainError, ZeroPowerError
from .spectral import Periodogram, periodogram

REPORT_SCHEMA_VERSION = 1

#: Fits with more points than this use the normal approximation to the t-tail.
_NORMAL_APPROX_N = 200


@dataclass(frozen=True)
class FullBand:
    """Regress over every available frequency index k = 1..L/2."""


@dataclass(frozen=True)
class LowFrequency:
    """Regress over k = 1..m only; the power law holds asymptotically at low
    frequencies, so a cutoff near sqrt(L) trades variance for reduced bias."""

    m: int


Cutoff = Union[FullBand, LowFrequency]


class Abscissa(enum.Enum):
    """Regression abscissa: raw index log k, or angular log(2*pi*k/L).

    The choice shifts only the intercept; slopes and inference are identical.
    """

    INDEX = "index"
    ANGULAR = "angular"


@dataclass(frozen=True)
class EstimatorConfig:
    pad_length: int
    cutoff: Cutoff = FullBand()
    abscissa: Abscissa = Abscissa.INDEX


def sqrt_cutoff(pad_length: int) -> LowFrequency:
    """The calibrated low-frequency cutoff m = floor(sqrt(L))."""
    return LowFrequency(math.isqrt(pad_length))


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit of log y = a + b log x with slope inference."""

    intercept: float
    slope: float
    slope_stderr: float
    pvalue: float
    n_points: int


@dataclass(frozen=True)
class LrdEstimate:
    """Per-dimension memory coefficients with OLS inference."""

    d: np.ndarray
    intercept: np.ndarray
    slope_stderr: np.ndarray
    pvalue: np.ndarray
    cutoff_used: int


def _slope_pvalue(t_stat: float, dof: int) -> float:
    """Two-sided p-value of the slope-zero test."""
    if not math.isfinite(t_stat):
        return 0.0
    if dof > _NORMAL_APPROX_N:
        return float(special.erfc(abs(t_stat) / math.sqrt(2.0)))
    return float(2.0 * special.stdtr(dof, -abs(t_stat)))


def ols_loglog(xs: Sequence[float], ys: Sequence[float]) -> OlsFit:
    """OLS of log ys on log xs with slope standard error and p-value.

    With fewer than 3 points the residual variance has no degrees of
    freedom, so stderr and pvalue are reported as NaN.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"xs and ys must be 1-d and equal length, got {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise DomainError(f"need at least 2 points, got {n}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("all xs and ys must be strictly positive for log-log regression")
    lx = np.log(x)
    ly = np.log(y)
    lx_mean = lx.mean()
    ly_mean = ly.mean()
    sxx = float(((lx - lx_mean) ** 2).sum())
    if sxx == 0.0:
        raise DegenerateInputError("log xs has zero variance; abscissa is degenerate")
    sxy = float(((lx - lx_mean) * (ly - ly_mean)).sum())
    slope = sxy / sxx
    intercept = ly_mean - slope * lx_mean
    if n == 2:
        return OlsFit(intercept, slope, float("nan"), float("nan"), n)
    residuals = ly - intercept - slope * lx
    rss = float(residuals @ residuals)
    stderr = math.sqrt(rss / (n - 2) / sxx)
    if stderr == 0.0:
        pvalue = 1.0 if slope == 0.0 else 0.0
    else:
        pvalue = _slope_pvalue(slope / stderr, n - 2)
    return OlsFit(intercept, slope, stderr, pvalue, n)


def _select_bins(pg: Periodogram, cutoff: Cutoff) -> int:
    half = pg.length // 2
    if isinstance(cutoff, FullBand):
        return half
    m = cutoff.m
    if not 2 <= m <= half:
        raise DomainError(f"low-frequency cutoff must lie in [2, {half}], got {m}")
    return m


def estimate_from_periodogram(pg: Periodogram, config: EstimatorConfig) -> LrdEstimate:
    """Fit each dimension over the selected bins; returns d = -slope/2."""
    m = _select_bins(pg, config.cutoff)
    ks = np.arange(1, m + 1, dtype=np.float64)
    xs = ks if config.abscissa is Abscissa.INDEX else 2.0 * np.pi * ks / pg.length
    p = pg.dim
    d = np.empty(p)
    intercept = np.empty(p)
    stderr = np.empty(p)
    pvalue = np.empty(p)
    for j in range(p):
        power = pg.power[:m, j]
        zero = np.flatnonzero(power <= 0.0)
        if zero.size:
            raise ZeroPowerError(dim=j, bin_index=int(zero[0]) + 1)
        fit = ols_loglog(xs, power)
        d[j] = -fit.slope / 2.0
        intercept[j] = fit.intercept
        stderr[j] = fit.slope_stderr
        pvalue[j] = fit.pvalue
    return LrdEstimate(d=d, intercept=intercept, slope_stderr=stderr, pvalue=pvalue, cutoff_used=m)


def estimate_sequence(
    seq: SymbolSequence,
    table: EmbeddingTable,
    config: EstimatorConfig,
    policy: OovPolicy = OovPolicy.ZERO,
) -> LrdEstimate:
    """Embed, zero-pad to the configured length, and fit the periodogram."""
    series = lookup_sequence(table, seq, policy)
    padded = pad_to_length(series, config.pad_length)
    return estimate_from_periodogram(periodogram(padded), config)


def hurst_from_d(d: float) -> float:
    """Self-similarity index H = d + 1/2."""
    return d + 0.5


def estimate_report(est: LrdEstimate, config: EstimatorConfig) -> dict:
    """Plain-JSON view of an estimate, including the configuration used."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "dim": int(est.d.size),
        "cutoff": est.cutoff_used,
        "abscissa": config.abscissa.value,
        "d": [float(v) for v in est.d],
        "intercept": [float(v) for v in est.intercept],
        "stderr": [float(v) for v in est.slope_stderr],
        "pvalue": [float(v) for v in est.pvalue],
    }


def gaussian_mutual_info(
    sigma_u: np.ndarray, sigma_v: np.ndarray, sigma: np.ndarray
) -> float:
    """Mutual information of jointly Gaussian blocks from their covariances.

    I(U; V) = 1/2 log(det(sigma_u) det(sigma_v) / det(sigma)) where sigma is
    the joint covariance with sigma_u, sigma_v as diagonal blocks. In the
    mono-variate case this reduces to -1/2 log(1 - rho^2).
    """
    su = np.atleast_2d(np.asarray(sigma_u, dtype=np.float64))
    sv = np.atleast_2d(np.asarray(sigma_v, dtype=np.float64))
    s = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    p, q = su.shape[0], sv.shape[0]
    if su.shape != (p, p) or sv.shape != (q, q) or s.shape != (p + q, p + q):
        raise DomainError(
            f"expected block shapes ({p},{p}), ({q},{q}) and joint ({p + q},{p + q}), "
            f"got {su.shape}, {sv.shape}, {s.shape}"
        )
    if not np.allclose(s, s.T):
        raise DomainError("joint covariance must be symmetric")
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise DomainError("joint covariance must be positive definite") from None
    sign_u, logdet_u = np.linalg.slogdet(su)
    sign_v, logdet_v = np.linalg.slogdet(sv)
    sign_j, logdet_j = np.linalg.slogdet(s)
    if sign_u <= 0 or sign_v <= 0 or sign_j <= 0:
        raise DomainError("covariance blocks must have positive determinants")
    return 0.5 * (logdet_u + logdet_v - logdet_j)


AutocovFn = Callable[[int], float]


def mi_decay_slope(autocov: AutocovFn, lags: Sequence[int]) -> OlsFit:
    """Fit log MI against log lag for a mono-variate Gaussian process.

    MI at lag h is -1/2 log(1 - rho(h)^2) with rho = gamma(h)/gamma(0); for a
    memory coefficient d the fitted slope estimates 2(2d - 1).
    """
    lag_array = np.asarray(list(lags), dtype=np.int64)
    if lag_array.size < 2:
        raise DomainError("need at least 2 lags")
    if np.any(lag_array < 1):
        raise DomainError("lags must be >= 1")
    gamma0 = float(autocov(0))
    if gamma0 <= 0:
        raise DomainError("autocovariance at lag 0 must be positive")
    mi = np.empty(lag_array.size)
    for i, h in enumerate(lag_array):
        rho = float(autocov(int(h))) / gamma0
        if abs(rho) >= 1.0:
            raise DomainError(f"correlation at lag {h} has |rho| >= 1")
        if rho == 0.0:
            raise DegenerateInputError(
                f"zero mutual information at lag {h}; process has no dependence there"
            )
        mi[i] = -0.5 * math.log1p(-(rho * rho))
    return ols_loglog(lag_array.astype(np.float64), mi)
