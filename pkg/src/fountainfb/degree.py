"""Degree distributions: ideal/robust soliton construction, rescaling, sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError

DEFAULT_C = 0.1
DEFAULT_DELTA = 0.5

PMF_TOL = 1e-12


@dataclass(frozen=True)
class RobustSolitonParams:
    """Block length and soliton parameters (c, delta)."""

    k: int
    c: float = DEFAULT_C
    delta: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameterError(f"block length must be >= 1, got {self.k}")
        if self.c <= 0:
            raise InvalidParameterError(f"soliton constant must be > 0, got {self.c}")
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"delta must be in (0,1), got {self.delta}")


@dataclass(frozen=True)
class DegreeDistribution:
    """Probability mass over degrees 1..support_size; pmf[i] is P(degree i+1)."""

    support_size: int
    pmf: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pmf = np.array(self.pmf, dtype=float)
        if self.support_size < 1 or len(pmf) != self.support_size:
            raise InvalidParameterError(
                f"pmf length {len(pmf)} does not match support size {self.support_size}"
            )
        if np.any(pmf < 0):
            raise InvalidParameterError("pmf entries must be nonnegative")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise InvalidParameterError(f"pmf sums to {pmf.sum()!r}, expected 1")
        pmf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)
        cdf = np.cumsum(pmf)
        cdf[-1] = 1.0
        cdf.flags.writeable = False
        object.__setattr__(self, "_cdf", cdf)

    def probability(self, d: int) -> float:
        """P(degree = d); zero outside the support."""
        if 1 <= d <= self.support_size:
            return float(self.pmf[d - 1])
        return 0.0

    def mean(self) -> float:
        return float(np.arange(1, self.support_size + 1) @ self.pmf)


def ideal_soliton(k: int) -> DegreeDistribution:
    """rho(1) = 1/k, rho(d) = 1/(d(d-1)) for 2 <= d <= k."""
    if k < 1:
        raise InvalidParameterError(f"block length must be >= 1, got {k}")
    pmf = np.zeros(k)
    pmf[0] = 1.0 / k
    d = np.arange(2, k + 1)
    pmf[1:] = 1.0 / (d * (d - 1))
    return DegreeDistribution(k, pmf)


@lru_cache(maxsize=1024)
def robust_soliton(params: RobustSolitonParams) -> DegreeDistribution:
    """Ideal soliton plus the extra tau component, normalized.

    R = c * ln(k/delta) * sqrt(k); the spike lands at min(ceil(k/R), k). The
    spike term R*ln(R/delta)/k is clamped at zero (it goes negative for tiny
    R), which degrades gracefully to the ideal soliton for k = 1. Results
    are cached (and immutable): a deleting encoder rebuilds the distribution
    after every acknowledgment.
    """
    k, c, delta = params.k, params.c, params.delta
    rho = ideal_soliton(k).pmf.copy()
    r = c * math.log(k / delta) * math.sqrt(k)
    if not (r > 0 and math.isfinite(r)):
        return DegreeDistribution(k, rho)
    spike = min(math.ceil(k / r), k)
    tau = np.zeros(k)
    d = np.arange(1, spike)
    tau[: spike - 1] = r / (d * k)
    tau[spike - 1] = max(0.0, r * math.log(r / delta)) / k
    total = rho + tau
    return DegreeDistribution(k, total / total.sum())


def rescale(params: RobustSolitonParams, m: int) -> DegreeDistribution:
    """Distribution for the shrunken block: a fresh construction over k - m."""
    if not 0 <= m < params.k:
        raise InvalidParameterError(
            f"deleted count {m} out of range for block length {params.k}"
        )
    return robust_soliton(RobustSolitonParams(params.k - m, params.c, params.delta))


def truncate(dist: DegreeDistribution, support: int) -> DegreeDistribution:
    """Restrict a pmf to degrees 1..support and renormalize.

    Used when an explicit pmf drives a session that deletes symbols: mass on
    now-impossible degrees is redistributed proportionally. If no mass
    remains, the result is a point mass at the largest feasible degree.
    """
    if support < 1:
        raise InvalidParameterError(f"support must be >= 1, got {support}")
    if support >= dist.support_size:
        return dist
    head = dist.pmf[:support].copy()
    total = head.sum()
    if total <= 0:
        head[:] = 0.0
        head[-1] = 1.0
        return DegreeDistribution(support, head)
    return DegreeDistribution(support, head / total)


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    """Draw a degree in [1, support_size] according to the pmf."""
    return int(np.searchsorted(dist._cdf, rng.random(), side="right")) + 1
