"""Point and interval estimators for multinomial parameters and hourly failure rates.

The Bayesian estimators (deterministic Dirichlet, imprecise Dirichlet model and its
credible interval) work on a vector of outcome counts.  The two classical contrast
estimators (normal approximation, chi-square/Poisson) work on a failure count over
an exposure in hours and deliberately return unclamped bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import NamedTuple, Sequence

from .exceptions import DomainError, EstimatorInapplicableError
from .kernels import beta_quantile, chi_square_quantile, normal_quantile

__all__ = [
    "DEFAULT_S",
    "ProbabilityInterval",
    "RawInterval",
    "RateObservation",
    "dirichlet_posterior_mean",
    "idm_interval",
    "idm_intervals",
    "idm_credible_interval",
    "clt_rate_interval",
    "chi_square_rate_interval",
    "round_half_away",
]

DEFAULT_S = 1.0
_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityInterval:
    """Closed subinterval ``[lower, upper]`` of [0, 1]."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval bounds must not be NaN")
        if lo < -_TOL or hi > 1.0 + _TOL or lo > hi + _TOL:
            raise DomainError(f"invalid probability interval [{lo!r}, {hi!r}]")
        # absorb rounding noise so the stored bounds satisfy 0 <= lower <= upper <= 1 exactly
        lo = min(max(lo, 0.0), 1.0)
        hi = min(max(hi, lo), 1.0)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def point(cls, p: float) -> "ProbabilityInterval":
        return cls(p, p)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def is_point(self) -> bool:
        return self.upper - self.lower <= _TOL

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= p <= self.upper + tol

    def complement(self) -> "ProbabilityInterval":
        return ProbabilityInterval(1.0 - self.upper, 1.0 - self.lower)

    def rounded(self, digits: int = 2) -> tuple[float, float]:
        return round_half_away(self.lower, digits), round_half_away(self.upper, digits)

    def __iter__(self):
        yield self.lower
        yield self.upper


class RawInterval(NamedTuple):
    """Interval returned by the contrast estimators; may leave [0, 1]."""

    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def clamped(self) -> ProbabilityInterval:
        """Presentation helper: intersect with [0, 1]."""
        return ProbabilityInterval(min(max(self.lower, 0.0), 1.0), min(max(self.upper, 0.0), 1.0))


@dataclass(frozen=True)
class RateObservation:
    """``failures`` failed hours observed over ``exposure_hours`` hours."""

    failures: int
    exposure_hours: int

    def __post_init__(self):
        if self.failures < 0:
            raise DomainError("failure count must be non-negative")
        if self.exposure_hours < 1:
            raise DomainError("exposure must be at least one hour")
        if self.failures > self.exposure_hours:
            raise DomainError("failure count cannot exceed the exposure in hours")


def round_half_away(x: float, digits: int = 2) -> float:
    """Round to ``digits`` decimals with ties going away from zero (table formatting)."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(quantum, rounding=ROUND_HALF_UP))


def _counts(counts: Sequence[int]) -> list[int]:
    values = [int(c) for c in counts]
    if len(values) < 2:
        raise DomainError("a multinomial needs at least two outcomes")
    if any(c < 0 for c in values):
        raise DomainError("counts must be non-negative")
    if any(int(c) != c for c in counts):
        raise DomainError("counts must be integers")
    return values


def _check_s(s: float) -> float:
    s = float(s)
    if not (s > 0.0) or math.isinf(s):
        raise DomainError(f"equivalent sample size s must be a finite positive number, got {s!r}")
    return s


def _check_index(m: int, size: int) -> None:
    if not (0 <= m < size):
        raise DomainError(f"outcome index {m} out of range for {size} outcomes")


def dirichlet_posterior_mean(counts: Sequence[int], weights: Sequence[float]) -> list[float]:
    """Posterior mean ``(n_m + a_m) / (n + s)`` of a Dirichlet-multinomial model.

    Zero prior weights are accepted; only an all-zero prior with no data is rejected
    because the estimate is then undefined.
    """
    n = _counts(counts)
    a = [float(w) for w in weights]
    if len(a) != len(n):
        raise DomainError(f"{len(n)} counts but {len(a)} prior weights")
    if any(w < 0.0 or math.isnan(w) for w in a):
        raise DomainError("prior weights must be non-negative")
    total = sum(n) + sum(a)
    if total == 0:
        raise DomainError("no data and zero prior weight: posterior mean undefined")
    return [(nm + am) / total for nm, am in zip(n, a)]


def idm_interval(counts: Sequence[int], s: float = DEFAULT_S, m: int = 0) -> ProbabilityInterval:
    """Imprecise Dirichlet model interval ``[n_m/(n+s), (n_m+s)/(n+s)]`` for outcome ``m`` (0-based)."""
    n = _counts(counts)
    s = _check_s(s)
    _check_index(m, len(n))
    total = sum(n) + s
    return ProbabilityInterval(n[m] / total, (n[m] + s) / total)


def idm_intervals(counts: Sequence[int], s: float = DEFAULT_S) -> list[ProbabilityInterval]:
    return [idm_interval(counts, s, m) for m in range(len(counts))]


def idm_credible_interval(
    counts: Sequence[int], s: float = DEFAULT_S, m: int = 0, gamma: float = 0.95
) -> ProbabilityInterval:
    """Interval whose posterior lower probability under the IDM reaches ``gamma``.

    Uses ``H = Beta(n_m, s + n - n_m)`` for the lower bound and
    ``G = Beta(s + n_m, n - n_m)`` for the upper bound; the cases ``n_m = 0`` and
    ``n_m = n`` pin the corresponding bound at 0 or 1.  With no data at all the
    result is the vacuous interval [0, 1].
    """
    n = _counts(counts)
    s = _check_s(s)
    _check_index(m, len(n))
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"credibility gamma must lie in (0, 1), got {gamma!r}")
    total = sum(n)
    nm = n[m]
    if total == 0:
        return ProbabilityInterval(0.0, 1.0)
    lo_p = (1.0 - gamma) / 2.0
    hi_p = (1.0 + gamma) / 2.0
    lower = 0.0 if nm == 0 else beta_quantile(nm, s + total - nm, lo_p)
    upper = 1.0 if nm == total else beta_quantile(s + nm, total - nm, hi_p)
    return ProbabilityInterval(lower, upper)


def clt_rate_interval(obs: RateObservation, confidence: float = 0.95) -> RawInterval:
    """Normal-approximation interval ``p ± z * sqrt(p(1-p)/T)``, bounds not clamped.

    Raises :class:`EstimatorInapplicableError` while the sample variance is zero,
    i.e. before the first failure (or when every hour failed).
    """
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must lie in (0, 1), got {confidence!r}")
    f, t = obs.failures, obs.exposure_hours
    if f == 0 or f == t:
        raise EstimatorInapplicableError(
            f"normal approximation undefined with {f} failures in {t} hours (zero sample variance)"
        )
    p = f / t
    half = normal_quantile((1.0 + confidence) / 2.0) * math.sqrt(p * (1.0 - p) / t)
    return RawInterval(p - half, p + half)


def chi_square_rate_interval(obs: RateObservation, confidence: float = 0.95) -> RawInterval:
    """Central Poisson interval for the hourly rate via chi-square quantiles.

    ``lower = chi2(2 n_f, (1-c)/2) / 2T`` (zero without failures) and
    ``upper = chi2(2 (n_f+1), (1+c)/2) / 2T``; the upper bound may exceed 1.
    """
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must lie in (0, 1), got {confidence!r}")
    f, t = obs.failures, obs.exposure_hours
    lower = 0.0 if f == 0 else chi_square_quantile(2.0 * f, (1.0 - confidence) / 2.0) / (2.0 * t)
    upper = chi_square_quantile(2.0 * (f + 1), (1.0 + confidence) / 2.0) / (2.0 * t)
    return RawInterval(lower, upper)
