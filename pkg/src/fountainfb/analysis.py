"""Closed-form expectations and absorbing-chain analysis for tiny block lengths.

For k = 2 and k = 3 the delete-and-conquer scheme admits exact expected
transmission and feedback counts as functions of the degree probabilities.
Three routes to those numbers coexist here:

  * k2_expected / k3_ndel / k3_fdel / k3_nlt: the closed-form expressions.
  * build_markov_k3 + expected_steps: the absorbing chain over decoder
    states, evaluated through its fundamental matrix.
  * simulator.fast_mc_small_k: brute-force protocol simulation.

The chain and the simulation agree exactly (the chain acknowledges
distance-1 receptions only, so compare against runs with
ack_distance_zero=False). The k3_ndel closed form disagrees with both by
exactly 3*p2^2*(1-p2)/(3-p2): its derivation slips in the final
partial-fraction collection, overcounting slightly for any p2 in (0, 1).
It is kept in its stated form; use expected_steps(build_markov_k3(p)) when
the chain-consistent value is wanted. k3_fdel and k3_nlt carry no such
discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError, SingularModelError

PROB_TOL = 1e-9


@dataclass(frozen=True)
class DegreeProbs3:
    """Degree pmf (p1, p2, p3) for a 3-input block; p1 must be positive.

    Degree-1 symbols are the only way decoding can start, so every expected
    count below diverges as p1 -> 0; requiring p1 > 0 keeps the model well
    posed.
    """

    p1: float
    p2: float
    p3: float

    def __post_init__(self) -> None:
        if self.p1 <= 0:
            raise InvalidParameterError(f"p1 must be > 0, got {self.p1}")
        if self.p2 < 0 or self.p3 < 0:
            raise InvalidParameterError("degree probabilities must be nonnegative")
        total = self.p1 + self.p2 + self.p3
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidParameterError(f"degree probabilities sum to {total!r}")

    @classmethod
    def from_p12(cls, p1: float, p2: float) -> "DegreeProbs3":
        return cls(p1, p2, 1.0 - p1 - p2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)


class K2Expected(NamedTuple):
    """Exact k = 2 expectations under pmf (2p, 1 - 2p)."""

    n_del: float
    f_del: float
    n_lt: float


def k2_expected(p: float) -> K2Expected:
    """Expected counts for a 2-input block.

    The model picks each single input with probability p and the pair with
    probability 1 - 2p, so p ranges over (0, 1/2]. Feedback excludes the
    final stop signal.
    """
    if not 0.0 < p <= 0.5:
        raise InvalidParameterError(f"p must be in (0, 1/2], got {p}")
    n_del = (4 * p * p + 1) / (2 * p)
    f_del = 2 * p
    n_lt = (4 * p * p - p + 1) / (2 * p * (1 - p))
    return K2Expected(n_del=n_del, f_del=f_del, n_lt=n_lt)


@dataclass(frozen=True)
class MarkovModel:
    """An absorbing chain: state labels, row-stochastic matrix, start dist."""

    states: tuple[str, ...]
    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.transition, dtype=float)
        pi = np.array(self.initial, dtype=float)
        n = len(self.states)
        if p.shape != (n, n):
            raise InvalidParameterError(f"transition shape {p.shape} does not match {n} states")
        if np.any(p < -PROB_TOL):
            raise InvalidParameterError("transition probabilities must be nonnegative")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-6):
            raise InvalidParameterError("transition rows must sum to 1")
        if pi.shape != (n,) or abs(pi.sum() - 1.0) > PROB_TOL or np.any(pi < 0):
            raise InvalidParameterError("initial distribution invalid")
        p.flags.writeable = False
        pi.flags.writeable = False
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "initial", pi)

    @property
    def absorbing(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(np.diag(self.transition) >= 1.0 - PROB_TOL))

    @property
    def transient(self) -> tuple[int, ...]:
        absorbing = set(self.absorbing)
        return tuple(i for i in range(len(self.states)) if i not in absorbing)


K3_STATES = (
    "empty",
    "one recovered, acked",
    "pair buffered",
    "triple buffered",
    "two recovered, both acked",
    "pair+triple buffered",
    "two recovered, one acked",
    "one acked, other pair buffered",
    "dependent pairs buffered",
    "done",
)


def build_markov_k3(probs: DegreeProbs3) -> MarkovModel:
    """Decoder-state chain for delete-and-conquer on a 3-input block.

    States merge permutation-isomorphic configurations. Acknowledgments fire
    on distance-1 receptions; after a deletion the degree pmf renormalizes
    over the remaining inputs (one deletion: p1' = p1/(p1+p2)). Transitions
    that change nothing (duplicate or useless symbols) are the self-loops.
    """
    p1, p2, p3 = probs.as_tuple()
    if p1 + p2 <= 0:
        raise SingularModelError("p1 + p2 = 0 leaves the renormalized pmf undefined")
    p1p = p1 / (p1 + p2)
    p2p = p2 / (p1 + p2)
    p = np.zeros((10, 10))
    p[0, 1] = p1
    p[0, 2] = p2
    p[0, 3] = p3
    p[1, 4] = p1p
    p[1, 7] = p2p
    p[2, 2] = p2 / 3
    p[2, 5] = p3
    p[2, 6] = 2 * p1 / 3
    p[2, 7] = p1 / 3
    p[2, 8] = 2 * p2 / 3
    p[3, 3] = p3
    p[3, 5] = p2
    p[3, 7] = p1
    p[4, 9] = 1.0
    p[5, 5] = (p2 + 3 * p3) / 3
    p[5, 7] = p1 / 3
    p[5, 8] = 2 * p2 / 3
    p[5, 9] = 2 * p1 / 3
    p[6, 6] = p1p / 2
    p[6, 9] = 1 - p1p / 2
    p[7, 7] = 1 - p1p
    p[7, 9] = p1p
    p[8, 8] = 1 - p1
    p[8, 9] = p1
    p[9, 9] = 1.0
    initial = np.zeros(10)
    initial[0] = 1.0
    return MarkovModel(states=K3_STATES, transition=p, initial=initial)


def _transient_blocks(model: MarkovModel) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    transient = model.transient
    if not transient:
        raise SingularModelError("chain has no transient states")
    idx = np.array(transient)
    q = model.transition[np.ix_(idx, idx)]
    pi = model.initial[idx]
    return q, pi, transient


def fundamental_matrix(model: MarkovModel) -> np.ndarray:
    """N = (I - Q)^-1 over the transient states, in their original order."""
    q, _, _ = _transient_blocks(model)
    try:
        return np.linalg.inv(np.eye(len(q)) - q)
    except np.linalg.LinAlgError as exc:
        raise SingularModelError(f"chain is not absorbing from every state: {exc}") from None


def expected_steps(model: MarkovModel) -> float:
    """Expected transitions before absorption, from the initial distribution."""
    q, pi, _ = _transient_blocks(model)
    try:
        t = np.linalg.solve(np.eye(len(q)) - q, np.ones(len(q)))
    except np.linalg.LinAlgError as exc:
        raise SingularModelError(f"chain is not absorbing from every state: {exc}") from None
    return float(pi @ t)


def visit_probabilities(model: MarkovModel) -> np.ndarray:
    """H[i, j]: probability of ever reaching transient state j from i.

    Indices follow the transient states in original order; H = (N - I) per
    column scaled by 1/N[j, j].
    """
    n = fundamental_matrix(model)
    return (n - np.eye(len(n))) / np.diag(n)


def k3_ndel(probs: DegreeProbs3) -> float:
    """Closed-form expected transmissions, 3-input delete-and-conquer.

    See the module docstring: this expression sits 3*p2^2*(1-p2)/(3-p2)
    above the chain's own expectation and is reproduced here as stated.
    """
    p1, p2, _ = probs.as_tuple()
    return float(_ndel_expr(np.array(p1), np.array(p2)))


def k3_fdel(probs: DegreeProbs3) -> float:
    """Closed-form expected feedback count, excluding the stop signal."""
    p1, p2, _ = probs.as_tuple()
    return float(_fdel_expr(np.array(p1), np.array(p2)))


def k3_nlt(probs: DegreeProbs3) -> float:
    """Closed-form expected transmissions for plain LT on a 3-input block."""
    p1, p2, _ = probs.as_tuple()
    return float(_nlt_expr(np.array(p1), np.array(p2)))


def _ndel_expr(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    return (
        1 / p1
        + p2 / (3 * p1 + 2 * p2)
        + p2**2 / (p1 + p2)
        - 8 * p2**3 / ((p1 + 2 * p2) * (p2 - 3))
        + (3 * p1 - 4 * p2 + 3 * p1 * p2 - 3 * p2**3 + 3) / (3 - p2)
    )


def _fdel_expr(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    return 3 * p1 / (3 * p1 + 2 * p2) + 6 * p1 / (3 - p2) + p1**2 / (p1 + p2) - 2 * p1


def _nlt_expr(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    return (
        1 / p1
        + 6 * p1 / (p1 - 3)
        + 18 * p1 / ((3 - p2) * (3 - 2 * p1 - p2))
        + 9 * p1 / (2 * (p1 + p2) * (3 * p1 + 2 * p2))
    )


@dataclass(frozen=True)
class CostModel:
    """Linear cost: c_forward per transmission, c_feedback per feedback."""

    c_forward: float = 1.0
    c_feedback: float = 1.0

    def __post_init__(self) -> None:
        if self.c_forward <= 0:
            raise InvalidParameterError("forward cost must be positive")
        if self.c_feedback < 0:
            raise InvalidParameterError("feedback cost must be nonnegative")


class OptimizeResult(NamedTuple):
    p1: float
    p2: float
    p3: float
    cost: float


def optimize_costs(
    costs: CostModel = CostModel(),
    grid_step: float = 0.005,
    refinements: int = 6,
) -> OptimizeResult:
    """Minimize c_forward * n_del + c_feedback * f_del over the k = 3 pmf.

    Coarse grid of spacing grid_step over the probability simplex, followed
    by repeated zooming around the incumbent; the objective is smooth away
    from p1 = 0, so this pins the optimum to ~1e-6 without a
    derivative-based solver.
    """
    if not 0 < grid_step <= 0.25:
        raise InvalidParameterError(f"grid_step must be in (0, 0.25], got {grid_step}")
    lo1, hi1 = 1e-6, 1.0
    lo2, hi2 = 0.0, 1.0
    steps = int(round(1.0 / grid_step)) + 1
    best = (np.inf, 0.5, 0.25)
    for _ in range(refinements):
        g1 = np.linspace(lo1, hi1, steps)
        g2 = np.linspace(lo2, hi2, steps)
        m1, m2 = np.meshgrid(g1, g2, indexing="ij")
        with np.errstate(divide="ignore", invalid="ignore"):
            value = costs.c_forward * _ndel_expr(m1, m2) + costs.c_feedback * _fdel_expr(m1, m2)
        value = np.where((m1 > 0) & (m2 >= 0) & (m1 + m2 <= 1.0), value, np.inf)
        flat = int(np.argmin(value))
        i, j = np.unravel_index(flat, value.shape)
        incumbent = (float(value[i, j]), float(m1[i, j]), float(m2[i, j]))
        if incumbent[0] < best[0]:
            best = incumbent
        span1 = (hi1 - lo1) / (steps - 1) * 2
        span2 = (hi2 - lo2) / (steps - 1) * 2
        lo1, hi1 = max(1e-9, best[1] - span1), min(1.0, best[1] + span1)
        lo2, hi2 = max(0.0, best[2] - span2), min(1.0, best[2] + span2)
    cost, p1, p2 = best
    return OptimizeResult(p1=p1, p2=p2, p3=1.0 - p1 - p2, cost=cost)
