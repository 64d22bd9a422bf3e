"""End-to-end session simulation over an erasure channel with feedback.

`run_session` drives one encoder against one or more receivers and records a
per-transmission trace. The symbol payloads are real bytes and every
completed receiver is checked against the original block, so the simulator
doubles as an integration test of the codec path.

`fast_mc_small_k` is a separate engine for very small block lengths: it
enumerates the exact joint encoder/decoder state space once and then runs
millions of trials as vectorized table lookups. It exists because validating
closed-form expectations to three decimals takes ~1e6 trials, which the
object-based path is too slow for.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .codec import DecoderState, EncodingSymbol, InputBlock, random_block
from .degree import (
    DegreeDistribution,
    RobustSolitonParams,
    robust_soliton,
    truncate,
)
from .encoders import (
    DncState,
    LabelState,
    SentLog,
    all_distance_next,
    dnc_ack,
    dnc_next,
    lt_next,
    quantized_apply,
    update_labels,
)
from .errors import DataCorruptionError, InvalidParameterError
from .feedback import (
    DeleteAck,
    DistanceReport,
    FeedbackPolicy,
    QuantizedReport,
    Terminate,
    feedback_bit_cost,
    on_receive,
)

SCHEMES = ("lt", "all_distance", "quantized", "dnc")

CAP_FACTOR = 50


@dataclass(frozen=True)
class SessionConfig:
    """Everything one simulated session depends on.

    degree_pmf overrides the robust soliton with an explicit pmf over degrees
    1..len(degree_pmf); delete-and-conquer then shrinks it by truncation
    instead of rebuilding a soliton. ack_distance_zero selects whether dnc
    acknowledges distance-0 receptions in addition to distance-1 ones.
    Distance-reporting schemes are single-receiver; broadcast (n_receivers
    > 1) is supported for lt and dnc.
    """

    k: int
    symbol_size: int = 16
    scheme: str = "lt"
    erasure_prob: float = 0.0
    s: int = 10
    p_fb: float = 1.0
    n_receivers: int = 1
    c: float = 0.1
    delta: float = 0.5
    seed: int = 0
    cap_factor: int = CAP_FACTOR
    degree_pmf: tuple[float, ...] | None = None
    ack_distance_zero: bool = True
    deterministic_selection: bool = False

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"unknown scheme {self.scheme!r}")
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if not 0.0 <= self.erasure_prob < 1.0:
            raise InvalidParameterError("erasure_prob must be in [0, 1)")
        if self.n_receivers < 1:
            raise InvalidParameterError("n_receivers must be >= 1")
        if self.n_receivers > 1 and self.scheme in ("all_distance", "quantized"):
            raise InvalidParameterError(
                f"{self.scheme} reports are per-receiver; broadcast is not supported"
            )
        if self.cap_factor < 1:
            raise InvalidParameterError("cap_factor must be >= 1")
        if self.degree_pmf is not None and len(self.degree_pmf) > self.k:
            raise InvalidParameterError("degree_pmf support exceeds k")


@dataclass(frozen=True)
class TraceRow:
    """Cumulative counters after one transmission; mae only when labels moved."""

    t: int
    sent: int
    received: int
    recovered: int
    feedback_msgs: int
    feedback_bits: int
    mae: float | None = None


@dataclass
class SessionTrace:
    """Per-transmission rows (slowest receiver's view) plus session totals."""

    config: SessionConfig
    trial: int
    rows: list[TraceRow]
    sent: int
    received: int
    recovered: int
    feedback_msgs: int
    feedback_bits: int
    completed: bool
    input_degrees: tuple[int, ...]
    recovery_times: tuple[int | None, ...]
    ack_events: tuple[tuple[int, int], ...] = ()


def mae(labels: LabelState, recovered: Iterable[int]) -> float:
    """Mean absolute error of the q estimates against true recovery state."""
    truth = np.zeros(labels.k)
    rec = list(recovered)
    if rec:
        truth[rec] = 1.0
    return float(np.mean(np.abs(labels.q - truth)))


def _policy_kind(scheme: str) -> str:
    return "none" if scheme == "lt" else scheme


def run_session(config: SessionConfig, trial: int = 0) -> SessionTrace:
    """Simulate one session; deterministic in (config.seed, trial).

    The transmission loop stops when every receiver has terminated or when
    cap_factor * k symbols have been sent, whichever comes first. With
    several receivers, trace rows follow the receiver that finished last
    (or, on a capped run, the one left furthest behind); feedback counters
    aggregate over all receivers.
    """
    rng = np.random.default_rng([config.seed, trial])
    k, n = config.k, config.n_receivers
    block = random_block(k, config.symbol_size, rng)

    if config.degree_pmf is not None:
        dist_full = DegreeDistribution(len(config.degree_pmf), np.array(config.degree_pmf))
        dnc_source: RobustSolitonParams | DegreeDistribution = dist_full
    else:
        params = RobustSolitonParams(k, config.c, config.delta)
        dist_full = robust_soliton(params)
        dnc_source = params
    d_max = dist_full.support_size

    log = SentLog()
    labels = LabelState.fresh(k)
    acked: list[set[int]] = [set() for _ in range(n)]
    state = DncState(k=k)
    decoders = [DecoderState(k) for _ in range(n)]
    policies = [
        FeedbackPolicy(
            kind=_policy_kind(config.scheme),
            s=config.s,
            p_fb=config.p_fb,
            ack_distance_zero=config.ack_distance_zero,
        )
        for _ in range(n)
    ]
    done = [False] * n
    recovery_times: list[int | None] = [None] * n

    recv_hist = [[] for _ in range(n)]
    rec_hist = [[] for _ in range(n)]
    msg_hist: list[int] = []
    bit_hist: list[int] = []
    mae_at: dict[int, float] = {}
    input_degrees: list[int] = []
    ack_events: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    feedback_msgs = 0
    feedback_bits = 0
    received = [0] * n
    cap = config.cap_factor * k
    sent = 0

    while not all(done) and sent < cap:
        seq = sent
        if config.scheme == "lt":
            y = lt_next(block, dist_full, rng, seq=seq)
        elif config.scheme == "dnc":
            y = dnc_next(block, state, dnc_source, rng, seq=seq)
        else:
            y = all_distance_next(
                block,
                labels,
                dist_full,
                rng,
                seq=seq,
                deterministic=config.deterministic_selection,
            )
        log.record(y)
        input_degrees.append(y.degree)
        sent += 1

        for i in range(n):
            if done[i]:
                continue
            if config.erasure_prob > 0 and rng.random() < config.erasure_prob:
                continue
            received[i] += 1
            msg = on_receive(policies[i], decoders[i], y, rng)
            if msg is None:
                continue
            if isinstance(msg, Terminate):
                done[i] = True
                recovery_times[i] = sent
                _verify_decode(block, decoders[i])
                state = _dnc_state(k, acked, done)
                continue
            feedback_msgs += 1
            feedback_bits += feedback_bit_cost(
                msg, d_max=d_max if isinstance(msg, DistanceReport) else None
            )
            if isinstance(msg, DistanceReport):
                for rseq, dist in msg.entries:
                    update_labels(labels, log, rseq, dist)
                mae_at[sent] = mae(labels, decoders[i].recovered)
            elif isinstance(msg, QuantizedReport):
                for off, bit in enumerate(msg.bits):
                    quantized_apply(labels, log, msg.first_seq + off, bit)
                mae_at[sent] = mae(labels, decoders[i].recovered)
            elif isinstance(msg, DeleteAck):
                acked[i].update(log.lookup(msg.seq))
                ack_events[i].append((received[i], len(acked[i])))
                state = _dnc_state(k, acked, done)

        for i in range(n):
            recv_hist[i].append(received[i])
            rec_hist[i].append(len(decoders[i].recovered))
        msg_hist.append(feedback_msgs)
        bit_hist.append(feedback_bits)

    completed = all(done)
    slow = _slowest_receiver(done, recovery_times, rec_hist)
    rows = [
        TraceRow(
            t=t,
            sent=t,
            received=recv_hist[slow][t - 1],
            recovered=rec_hist[slow][t - 1],
            feedback_msgs=msg_hist[t - 1],
            feedback_bits=bit_hist[t - 1],
            mae=mae_at.get(t),
        )
        for t in range(1, sent + 1)
    ]
    return SessionTrace(
        config=config,
        trial=trial,
        rows=rows,
        sent=sent,
        received=received[slow],
        recovered=len(decoders[slow].recovered),
        feedback_msgs=feedback_msgs,
        feedback_bits=feedback_bits,
        completed=completed,
        input_degrees=tuple(input_degrees),
        recovery_times=tuple(recovery_times),
        ack_events=tuple(ack_events[slow]),
    )


def _verify_decode(block: InputBlock, decoder: DecoderState) -> None:
    for j in range(block.k):
        if decoder.recovered.get(j) != block.payloads[j]:
            raise DataCorruptionError(f"decoded payload mismatch at input {j}")


def _dnc_state(k: int, acked: list[set[int]], done: list[bool]) -> DncState:
    """Deletable inputs: those acknowledged by every receiver still listening."""
    pending = [acked[i] for i in range(len(acked)) if not done[i]]
    if not pending:
        return DncState(k=k)
    deleted = frozenset(set.intersection(*pending))
    return DncState(k=k, deleted=deleted)


def _slowest_receiver(
    done: list[bool], times: list[int | None], rec_hist: list[list[int]]
) -> int:
    unfinished = [i for i, d in enumerate(done) if not d]
    if unfinished:
        return min(unfinished, key=lambda i: rec_hist[i][-1] if rec_hist[i] else 0)
    return max(range(len(times)), key=lambda i: times[i])


def run_many(config: SessionConfig, n_trials: int) -> list[SessionTrace]:
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    return [run_session(config, trial=t) for t in range(n_trials)]


def intermediate_curve(trace: SessionTrace) -> tuple[np.ndarray, np.ndarray]:
    """(received count, recovered fraction) pairs along the trace."""
    x = np.array([row.received for row in trace.rows], dtype=int)
    y = np.array([row.recovered for row in trace.rows], dtype=float) / trace.config.k
    return x, y


def average_input_degree(trace: SessionTrace) -> float:
    """Mean degree over every transmitted symbol, erased or not."""
    return float(np.mean(trace.input_degrees))


CSV_HEADER = ("trial", "t", "sent", "received", "recovered", "feedback_msgs", "feedback_bits", "mae")


def export_csv(traces: SessionTrace | Sequence[SessionTrace], path: str) -> None:
    """Write one row per transmission across all traces; mae blank off-flush."""
    if isinstance(traces, SessionTrace):
        traces = [traces]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for trace in traces:
            for row in trace.rows:
                writer.writerow(
                    (
                        trace.trial,
                        row.t,
                        row.sent,
                        row.received,
                        row.recovered,
                        row.feedback_msgs,
                        row.feedback_bits,
                        "" if row.mae is None else f"{row.mae:.6f}",
                    )
                )


# ---------------------------------------------------------------------------
# exact-state-space Monte Carlo for tiny k


class _SmallKChain:
    """Joint (recovered, pending, deleted) state machine for small blocks.

    Pending symbols are tracked as reduced residual neighbor sets; duplicates
    carry no extra peeling information, so a set of frozensets is a faithful
    state. For k <= 4 the reachable space stays tiny, which lets every
    transition probability be tabulated once.
    """

    def __init__(self, k: int, pmf: Sequence[float], scheme: str, ack_distance_zero: bool):
        if scheme not in ("lt", "dnc"):
            raise InvalidParameterError(f"fast path supports lt and dnc, not {scheme!r}")
        if k < 1 or k > 6:
            raise InvalidParameterError("fast path is meant for tiny k (1..6)")
        if len(pmf) > k:
            raise InvalidParameterError("pmf support exceeds k")
        self.k = k
        self.scheme = scheme
        self.ack_distance_zero = ack_distance_zero
        self.dist = DegreeDistribution(len(pmf), np.array(pmf, dtype=float))
        self._ids: dict[tuple, int] = {}
        self._outcomes: list[list[tuple[float, int, int]]] = []
        self.absorb = self._build()

    def _state_id(self, state: tuple, frontier: list[tuple]) -> int:
        recovered = state[0]
        if len(recovered) == self.k:
            # collapse every fully-recovered variant into one absorbing state
            state = (recovered, frozenset(), frozenset())
        sid = self._ids.get(state)
        if sid is None:
            sid = len(self._ids)
            self._ids[state] = sid
            self._outcomes.append([])
            frontier.append(state)
        return sid

    def _build(self) -> int:
        start = (frozenset(), frozenset(), frozenset())
        frontier: list[tuple] = []
        self._state_id(start, frontier)
        absorb = None
        while frontier:
            state = frontier.pop()
            sid = self._ids[state]
            recovered, pending, deleted = state
            if len(recovered) == self.k:
                absorb = sid if absorb is None else absorb
                continue
            merged: dict[tuple[int, int], float] = {}
            for prob, nxt, fb in self._transitions(recovered, pending, deleted):
                nid = self._state_id(nxt, frontier)
                merged[(nid, fb)] = merged.get((nid, fb), 0.0) + prob
            self._outcomes[sid] = [(p, nid, fb) for (nid, fb), p in merged.items()]
        if absorb is None:
            raise InvalidParameterError("absorbing state unreachable; check the pmf")
        return absorb

    def _transitions(self, recovered, pending, deleted):
        active = sorted(set(range(self.k)) - set(deleted))
        dist = truncate(self.dist, len(active))
        for d in range(1, dist.support_size + 1):
            p_d = dist.probability(d)
            if p_d == 0.0:
                continue
            combos = math.comb(len(active), d)
            for nbs in itertools.combinations(active, d):
                gap = len(set(nbs) - recovered)
                new_rec, new_pend = _peel_sets(recovered, pending, frozenset(nbs))
                fb = 0
                new_del = deleted
                if self.scheme == "dnc":
                    lo = 0 if self.ack_distance_zero else 1
                    if lo <= gap <= 1:
                        if len(new_rec) == self.k:
                            pass  # terminal reception: the stop signal replaces the ack
                        else:
                            fb = 1
                            new_del = deleted | frozenset(nbs)
                yield p_d / combos, (new_rec, new_pend, new_del), fb


def _peel_sets(
    recovered: frozenset, pending: frozenset, nbs: frozenset
) -> tuple[frozenset, frozenset]:
    """Peeling on index sets only; payload values cannot affect the dynamics."""
    residual = nbs - recovered
    if not residual:
        return recovered, pending
    if len(residual) >= 2:
        reduced = frozenset(s - recovered for s in pending) | {residual}
        return recovered, frozenset(s for s in reduced if len(s) >= 2)
    rec = set(recovered) | residual
    buf = [set(s) for s in pending]
    changed = True
    while changed:
        changed = False
        for s in buf:
            s -= rec
            if len(s) == 1:
                rec |= s
                s.clear()
                changed = True
    return frozenset(rec), frozenset(frozenset(s) for s in buf if len(s) >= 2)


def fast_mc_small_k(
    k: int,
    pmf: Sequence[float],
    n_trials: int,
    seed: int = 0,
    scheme: str = "dnc",
    ack_distance_zero: bool = True,
) -> tuple[float, float]:
    """Mean (transmissions, feedback messages) to full recovery, by lookup MC.

    Transmissions include the terminal one; the stop signal it triggers is
    not a counted feedback message. Trials are vectorized: each step draws
    one uniform per live trial and advances it through the precomputed
    outcome table of its current state.
    """
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    chain = _SmallKChain(k, pmf, scheme, ack_distance_zero)

    n_states = len(chain._outcomes)
    width = max(1, max(len(o) for o in chain._outcomes))
    cum = np.ones((n_states, width))
    nxt = np.zeros((n_states, width), dtype=np.int64)
    fbt = np.zeros((n_states, width))
    for sid, outcomes in enumerate(chain._outcomes):
        if not outcomes:  # absorbing
            nxt[sid, :] = sid
            continue
        probs = np.array([p for p, _, _ in outcomes])
        cum[sid, : len(outcomes)] = np.cumsum(probs)
        cum[sid, len(outcomes) - 1] = 1.0
        cum[sid, len(outcomes):] = 1.0
        nxt[sid, : len(outcomes)] = [nid for _, nid, _ in outcomes]
        nxt[sid, len(outcomes):] = outcomes[-1][1]
        fbt[sid, : len(outcomes)] = [fb for _, _, fb in outcomes]

    rng = np.random.default_rng(seed)
    states = np.zeros(n_trials, dtype=np.int64)
    n_tx = np.zeros(n_trials)
    n_fb = np.zeros(n_trials)
    live = states != chain.absorb
    while live.any():
        cur = states[live]
        u = rng.random(len(cur))
        idx = (u[:, None] > cum[cur]).sum(axis=1)
        n_tx[live] += 1
        n_fb[live] += fbt[cur, idx]
        states[live] = nxt[cur, idx]
        live = states != chain.absorb
    return float(n_tx.mean()), float(n_fb.mean())
