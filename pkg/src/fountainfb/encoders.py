"""Encoder state machines: baseline LT, All-Distance, Quantized-Distance,
Delete-and-Conquer.

The three feedback-driven variants differ only in how they bias neighbor
selection: All-Distance and Quantized-Distance keep a per-input
decoded-probability estimate q_j and split inputs into an undecoded pool U
(q < 1/2) and a decoded pool D, drawing one neighbor from U and the rest from
D; Delete-and-Conquer removes acknowledged inputs outright and rescales the
degree distribution to the remaining block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import EncodingSymbol, InputBlock, xor_combine
from .degree import (
    DegreeDistribution,
    RobustSolitonParams,
    rescale,
    sample_degree,
    truncate,
)
from .errors import InvalidParameterError, ProtocolError

THRESHOLD = 0.5


@dataclass
class LabelState:
    """Decoded-probability estimates q_j for each input, all starting at 0."""

    q: np.ndarray

    @classmethod
    def fresh(cls, k: int) -> "LabelState":
        if k < 1:
            raise InvalidParameterError("k must be >= 1")
        return cls(q=np.zeros(k))

    @property
    def k(self) -> int:
        return len(self.q)


@dataclass
class SentLog:
    """Neighbor sets of every transmitted symbol, keyed by sequence number."""

    neighbors: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def record(self, y: EncodingSymbol) -> None:
        self.neighbors[y.seq] = y.neighbors

    def lookup(self, seq: int) -> tuple[int, ...]:
        try:
            return self.neighbors[seq]
        except KeyError:
            raise ProtocolError(f"feedback references unknown seq {seq}") from None


@dataclass(frozen=True)
class DncState:
    """Partition of inputs into still-active and deleted (acknowledged) sets."""

    k: int
    deleted: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if any(not 0 <= j < self.k for j in self.deleted):
            raise InvalidParameterError("deleted index out of range")

    @property
    def m(self) -> int:
        return len(self.deleted)

    @property
    def active(self) -> frozenset[int]:
        return frozenset(j for j in range(self.k) if j not in self.deleted)


def lt_next(
    block: InputBlock, dist: DegreeDistribution, rng: np.random.Generator, seq: int = 0
) -> EncodingSymbol:
    """Classic LT step: degree from dist, neighbors uniform without replacement."""
    d = min(sample_degree(dist, rng), block.k)
    neighbors = rng.choice(block.k, size=d, replace=False)
    neighbors = tuple(int(j) for j in neighbors)
    return EncodingSymbol(seq=seq, neighbors=neighbors, payload=xor_combine(block, neighbors))


def update_labels(labels: LabelState, log: SentLog, seq: int, f_t: int) -> None:
    """Fold one reported distance f_t into the q estimates.

    With d the symbol's degree and n_t its neighbors currently labeled 1, the
    still-unlabeled neighbor count is l_t = d - n_t, and each neighbor with
    q_j < 1 moves to max(q_j, (l_t - f_t)/l_t). A zero distance proves every
    neighbor decoded.
    """
    nbs = log.lookup(seq)
    d = len(nbs)
    if not 0 <= f_t <= d:
        raise ProtocolError(f"distance {f_t} out of range for degree {d} symbol {seq}")
    q = labels.q
    if f_t == 0:
        q[list(nbs)] = 1.0
        return
    l_t = d - sum(1 for j in nbs if q[j] == 1.0)
    if l_t == 0:
        raise ProtocolError(
            f"symbol {seq} fully labeled decoded but reported distance {f_t}"
        )
    estimate = (l_t - f_t) / l_t
    for j in nbs:
        if q[j] < 1.0 and estimate > q[j]:
            q[j] = estimate


def partition(labels: LabelState) -> tuple[list[int], list[int]]:
    """Split inputs into U (q < 1/2) and D (q >= 1/2)."""
    u = np.flatnonzero(labels.q < THRESHOLD)
    d = np.flatnonzero(labels.q >= THRESHOLD)
    return [int(j) for j in u], [int(j) for j in d]


def selection_weights(labels: LabelState) -> tuple[np.ndarray, np.ndarray]:
    """Selection pmfs (P_U, P_D) as full-length vectors, zero off their sets."""
    q = labels.q
    in_u = q < THRESHOLD
    p_u = np.where(in_u, 1.0 - q, 0.0)
    total_u = p_u.sum()
    if total_u > 0:
        p_u /= total_u
    p_d = np.where(~in_u, q, 0.0)
    total_d = p_d.sum()
    if total_d > 0:
        p_d /= total_d
    return p_u, p_d


def _weighted_without_replacement(
    weights: np.ndarray, count: int, rng: np.random.Generator
) -> list[int]:
    """Draw `count` distinct indices, each step proportional to remaining weight.

    Uses the exponential-key trick: taking the top `count` indices by
    u**(1/w) with u uniform is distributed exactly as sequential
    draw-and-renormalize.
    """
    idx = np.flatnonzero(weights > 0)
    if count >= len(idx):
        return [int(j) for j in idx]
    if count <= 0:
        return []
    keys = rng.random(len(idx)) ** (1.0 / weights[idx])
    top = np.argpartition(keys, len(idx) - count)[-count:]
    return [int(j) for j in idx[top]]


def all_distance_next(
    block: InputBlock,
    labels: LabelState,
    dist: DegreeDistribution,
    rng: np.random.Generator,
    seq: int = 0,
    deterministic: bool = False,
) -> EncodingSymbol:
    """Biased LT step: one neighbor from U via P_U, d-1 from D via P_D.

    Fallbacks when a pool runs dry: an empty U sends all d neighbors from D;
    a short D tops up the shortfall from U. `deterministic` swaps sampling
    for the argmax rule (largest 1-q in U, largest q's in D).
    """
    k = block.k
    d = min(sample_degree(dist, rng), k)
    p_u, p_d = selection_weights(labels)
    u_size = int(np.count_nonzero(p_u))
    d_size = int(np.count_nonzero(p_d))

    if deterministic:
        order_u = np.argsort(-p_u, kind="stable")[:u_size]
        order_d = np.argsort(-p_d, kind="stable")[:d_size]
        if u_size == 0:
            chosen = [int(j) for j in order_d[:d]]
        else:
            from_d = min(d - 1, d_size)
            chosen = [int(order_u[0])] + [int(j) for j in order_d[:from_d]]
            chosen += [int(j) for j in order_u[1 : 1 + d - len(chosen)]]
    elif u_size == 0:
        chosen = _weighted_without_replacement(p_d, d, rng)
    else:
        from_d = min(d - 1, d_size)
        shortfall = d - 1 - from_d
        chosen = _weighted_without_replacement(p_u, 1 + shortfall, rng)
        chosen += _weighted_without_replacement(p_d, from_d, rng)

    neighbors = tuple(sorted(chosen))
    return EncodingSymbol(seq=seq, neighbors=neighbors, payload=xor_combine(block, neighbors))


def quantized_apply(labels: LabelState, log: SentLog, seq: int, bit: int) -> None:
    """Fold one quantized report bit into q.

    bit 1 means the symbol's neighbors are mostly decoded: they all move to
    q = 1. bit 0 means mostly undecoded: neighbors not already at 1 drop to
    q = 0 (a decoded input is never demoted; stale zero bits must not undo
    recovery).
    """
    if bit not in (0, 1):
        raise InvalidParameterError(f"bit must be 0 or 1, got {bit}")
    nbs = log.lookup(seq)
    q = labels.q
    if bit == 1:
        q[list(nbs)] = 1.0
    else:
        for j in nbs:
            if q[j] < 1.0:
                q[j] = 0.0


def dnc_next(
    block: InputBlock,
    state: DncState,
    source: RobustSolitonParams | DegreeDistribution,
    rng: np.random.Generator,
    seq: int = 0,
) -> EncodingSymbol:
    """Delete-and-Conquer step: sample over active inputs only.

    A RobustSolitonParams source is rebuilt over the k - m remaining inputs;
    an explicit DegreeDistribution is truncated and renormalized to them.
    """
    active = sorted(state.active)
    if not active:
        raise InvalidParameterError("no active inputs left to encode")
    if isinstance(source, RobustSolitonParams):
        dist = rescale(source, state.m)
    else:
        dist = truncate(source, len(active))
    d = min(sample_degree(dist, rng), len(active))
    picks = rng.choice(len(active), size=d, replace=False)
    neighbors = tuple(sorted(active[int(i)] for i in picks))
    return EncodingSymbol(seq=seq, neighbors=neighbors, payload=xor_combine(block, neighbors))


def dnc_ack(state: DncState, neighbors: frozenset[int] | set[int] | tuple[int, ...]) -> DncState:
    """Mark the given inputs deleted; idempotent on repeats."""
    return DncState(k=state.k, deleted=state.deleted | frozenset(neighbors))
