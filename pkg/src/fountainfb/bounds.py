"""Upper bounds on maximum-likelihood decoding failure over an erasure channel.

The ML decoder fails for input j exactly when some nonzero x with x_j = 1
lies in the null space of the received adjacency matrix. Union-bounding over
those x needs Pr{Gx = 0}, which factors over independent rows. With
acknowledgment-driven deletion the rows are only piecewise identically
distributed: each feedback shrinks the selection window, so rows group into
intervals with a fixed window and degree distribution.

Because acked sets are nested, Pr{rx = 0} for a row depends on x only
through how many of its ones fall in each ack stratum (the symbols newly
acked at each feedback, plus the never-acked remainder). Enumerating those
per-stratum counts with multiplicities replaces the 2^k sum over x.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

from .degree import DEFAULT_C, DEFAULT_DELTA, DegreeDistribution, RobustSolitonParams, robust_soliton
from .errors import InvalidParameterError


@dataclass(frozen=True)
class FeedbackSchedule:
    """Feedback trigger points and cumulative ack counts for one session.

    The i-th feedback (1-based) arrives after reception t[i-1], having
    acknowledged m[i-1] input symbols in total. Interval 0 covers receptions
    1..t[0] with the full window; interval i covers t[i-1]+1..t[i] (the last
    runs to n) with window k - m[i-1]. An empty schedule is plain LT.
    """

    k: int
    n: int
    t: tuple[int, ...] = ()
    m: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if self.n < 1:
            raise InvalidParameterError("n must be >= 1")
        if len(self.t) != len(self.m):
            raise InvalidParameterError("t and m must have equal length")
        if any(a < 1 or a > self.n for a in self.t):
            raise InvalidParameterError("feedback times must lie in [1, n]")
        if any(b >= a for a, b in zip(self.t[1:], self.t)):
            raise InvalidParameterError("feedback times must be strictly increasing")
        if any(x < 0 for x in self.m) or any(b > a for a, b in zip(self.m[1:], self.m)):
            raise InvalidParameterError("ack counts must be nonnegative and nondecreasing")
        if self.m and self.m[-1] >= self.k:
            raise InvalidParameterError("cannot acknowledge the whole block")

    @property
    def feedback_count(self) -> int:
        return len(self.t)

    def intervals(self) -> list[tuple[int, int]]:
        """(row count, acked-so-far) per interval, in transmission order."""
        bounds = (0,) + self.t + (self.n,)
        acked = (0,) + self.m
        return [
            (bounds[i + 1] - bounds[i], acked[i])
            for i in range(len(acked))
        ]

    def strata_sizes(self) -> tuple[int, ...]:
        """Sizes of the ack strata; the never-acked remainder comes last."""
        prev = 0
        out = []
        for mi in self.m:
            out.append(mi - prev)
            prev = mi
        out.append(self.k - prev)
        return tuple(out)


class WeightProfile(NamedTuple):
    """Ones of x per ack stratum, with how many x share that split.

    multiplicity counts vectors having exactly these per-stratum weights and
    a 1 at the target index, whose stratum is fixed when enumerating.
    """

    counts: tuple[int, ...]
    multiplicity: int

    @property
    def weight(self) -> int:
        return sum(self.counts)


def weight_profiles(
    schedule: FeedbackSchedule, target_stratum: int = -1
) -> list[WeightProfile]:
    """All per-stratum weight splits with nonzero multiplicity.

    target_stratum picks where the failing index j lives: 0..L-1 are the
    sets newly acked at each feedback, -1 (or L) the never-acked remainder.
    That stratum must hold at least one symbol besides... at least j itself,
    so its count starts at 1 and one slot is spoken for.
    """
    sizes = schedule.strata_sizes()
    target = target_stratum % len(sizes)
    if sizes[target] < 1:
        raise InvalidParameterError(f"target stratum {target} is empty")
    ranges = []
    for s, size in enumerate(sizes):
        lo = 1 if s == target else 0
        ranges.append(range(lo, size + 1))
    profiles = []
    for counts in itertools.product(*ranges):
        mult = 1
        for s, (size, c) in enumerate(zip(sizes, counts)):
            mult *= math.comb(size - 1, c - 1) if s == target else math.comb(size, c)
        profiles.append(WeightProfile(counts, mult))
    return profiles


def row_zero_prob(k: int, m: int, w_bar: int, dist: DegreeDistribution) -> float:
    """Pr{rx = 0} for one row drawn over a window of k - m inputs.

    w_bar is the number of ones of x inside the window; acked ones cannot be
    touched by the row. The row hits an even number u of those w_bar indices
    and d - u of the other k - m - w_bar window indices.
    """
    window = k - m
    if window < 1:
        raise InvalidParameterError("window k - m must be >= 1")
    if not 0 <= w_bar <= window:
        raise InvalidParameterError(f"w_bar {w_bar} outside window {window}")
    if dist.support_size > window:
        raise InvalidParameterError("degree support exceeds the window")
    total = 0.0
    for d in range(1, dist.support_size + 1):
        p_d = dist.probability(d)
        if p_d == 0.0:
            continue
        hits = sum(
            math.comb(w_bar, u) * math.comb(window - w_bar, d - u)
            for u in range(0, min(2 * (d // 2), w_bar) + 1, 2)
        )
        total += p_d * hits / math.comb(window, d)
    return total


def interval_zero_prob(
    k: int, m: int, w_bar: int, dist: DegreeDistribution, rows: int
) -> float:
    """Pr{all rows of one interval annihilate x}; rows are independent."""
    if rows < 0:
        raise InvalidParameterError("row count must be >= 0")
    if rows == 0:
        return 1.0
    return row_zero_prob(k, m, w_bar, dist) ** rows


DistFactory = Callable[[int], DegreeDistribution]


def _resolve_factory(
    dists: DistFactory | RobustSolitonParams | None,
) -> DistFactory:
    if dists is None:
        return lambda window: robust_soliton(
            RobustSolitonParams(window, DEFAULT_C, DEFAULT_DELTA)
        )
    if isinstance(dists, RobustSolitonParams):
        params = dists
        return lambda window: robust_soliton(
            RobustSolitonParams(window, params.c, params.delta)
        )
    return dists


def ml_failure_bound_feedback(
    schedule: FeedbackSchedule,
    dists: DistFactory | RobustSolitonParams | None = None,
    target_stratum: int = -1,
) -> float:
    """Union bound on per-input ML failure under the given ack schedule.

    dists maps a window size to the degree distribution used over it; the
    default rebuilds a robust soliton for each window. The x-sum runs over
    weight profiles: within interval i only the ones in strata acked later
    than i count, and the per-row probability is raised to the interval's
    row count. target_stratum places the failing index (default: the
    never-acked remainder, the only inputs not already recovered).
    """
    factory = _resolve_factory(dists)
    intervals = schedule.intervals()
    k = schedule.k

    # interval i cancels strata 1..i; w_bar_i = total weight minus those
    tables = []
    for rows, m in intervals:
        if rows == 0:
            tables.append(None)
            continue
        dist = factory(k - m)
        tables.append(
            [row_zero_prob(k, m, w, dist) ** rows for w in range(k - m + 1)]
        )

    total = 0.0
    for profile in weight_profiles(schedule, target_stratum):
        term = float(profile.multiplicity)
        for i, (rows, m) in enumerate(intervals):
            if rows == 0:
                continue
            w_bar = sum(profile.counts[i:])
            term *= tables[i][w_bar]
            if term == 0.0:
                break
        total += term
    return min(1.0, total)


def ml_failure_bound_nofeedback(
    k: int, n: int, dist: DegreeDistribution | None = None
) -> float:
    """Union bound on per-input ML failure for plain LT after n receptions."""
    if k < 1 or n < 1:
        raise InvalidParameterError("k and n must be >= 1")
    if dist is None:
        dist = robust_soliton(RobustSolitonParams(k, DEFAULT_C, DEFAULT_DELTA))
    total = 0.0
    for w in range(1, k + 1):
        total += math.comb(k - 1, w - 1) * row_zero_prob(k, 0, w, dist) ** n
    return min(1.0, total)


def schedule_from_trace(trace, n: int | None = None) -> FeedbackSchedule:
    """Empirical ack schedule of a simulated delete-and-conquer session.

    Takes the trace's per-ack (received count, total acked) events for the
    traced receiver; n defaults to everything that receiver got. Events past
    n, or reached only once the whole block was acknowledged, are dropped.
    """
    k = trace.config.k
    if n is None:
        n = trace.received
    t, m = [], []
    for received, acked in trace.ack_events:
        if received > n or acked >= k:
            break
        t.append(received)
        m.append(acked)
    return FeedbackSchedule(k=k, n=n, t=tuple(t), m=tuple(m))
