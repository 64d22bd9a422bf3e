"""Decoder-side feedback policies and the wire format for feedback messages.

A policy object is per-receiver, per-session state. `on_receive` is the
single receive hook: it peels the arriving symbol into the decoder and
decides what (if anything) flows back. Distances always refer to the
recovered set as it stood before the symbol was peeled.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .codec import DecoderState, EncodingSymbol, distance
from .errors import InvalidParameterError, MalformedMessageError, WireEncodeError

KINDS = ("all_distance", "quantized", "dnc", "none")


@dataclass(frozen=True)
class DistanceReport:
    """Bundled (seq, distance) pairs, one per received symbol since last report."""

    entries: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class QuantizedReport:
    """One bit per received symbol; bit i describes symbol first_seq + i."""

    first_seq: int
    bits: tuple[int, ...]


@dataclass(frozen=True)
class DeleteAck:
    """Acknowledges one encoding symbol whose neighbors are all recovered."""

    seq: int


@dataclass(frozen=True)
class Terminate:
    """All k inputs recovered; stop transmitting. Costs nothing and is not counted."""


FeedbackMessage = DistanceReport | QuantizedReport | DeleteAck | Terminate


@dataclass
class FeedbackPolicy:
    """Feedback configuration plus the per-session bundling state.

    kind:      all_distance | quantized | dnc | none
    s:         report interval for the distance schemes (one report per s
               received symbols)
    p_fb:      probability of actually sending each dnc acknowledgment
    ack_distance_zero: dnc acks fire on distance 0 and 1 when True (default);
               on distance 1 only when False. The expected-feedback analysis
               for k=3 models the distance-1-only variant; see `analysis`.
    """

    kind: str = "none"
    s: int = 10
    p_fb: float = 1.0
    ack_distance_zero: bool = True
    _entries: list[tuple[int, int]] = field(default_factory=list, repr=False)
    _bits: list[int] = field(default_factory=list, repr=False)
    _first_seq: int = field(default=-1, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown feedback kind {self.kind!r}")
        if self.s < 1:
            raise InvalidParameterError(f"interval s must be >= 1, got {self.s}")
        if not 0.0 <= self.p_fb <= 1.0:
            raise InvalidParameterError(f"p_fb must be in [0,1], got {self.p_fb}")


def on_receive(
    policy: FeedbackPolicy,
    decoder: DecoderState,
    y: EncodingSymbol,
    rng: np.random.Generator | None = None,
) -> FeedbackMessage | None:
    """Peel y into the decoder and return the policy's response, if any.

    Full recovery always answers with Terminate, superseding anything else.
    Quantized bundles are positional (bit i maps to first_seq + i), so a gap
    in received sequence numbers (an erased symbol) flushes the pending bits
    early to keep that mapping exact.
    """
    dist = distance(y, decoder.recovered)
    policy_kind = policy.kind
    early: FeedbackMessage | None = None
    if policy_kind == "quantized" and policy._bits and y.seq != policy._first_seq + len(policy._bits):
        early = _flush_quantized(policy)

    decoder.peel(y)
    if decoder.done:
        _reset_bundles(policy)
        return Terminate()
    if early is not None:
        # the new symbol starts a fresh bundle; size 1 < s here because s = 1
        # never leaves bits pending
        _record_quantized(policy, y, dist)
        return early

    if policy_kind == "all_distance":
        policy._entries.append((y.seq, dist))
        if len(policy._entries) == policy.s:
            entries = tuple(policy._entries)
            policy._entries.clear()
            return DistanceReport(entries)
        return None

    if policy_kind == "quantized":
        _record_quantized(policy, y, dist)
        if len(policy._bits) == policy.s:
            return _flush_quantized(policy)
        return None

    if policy_kind == "dnc":
        threshold = 1 if not policy.ack_distance_zero else 0
        if threshold <= dist <= 1:
            if policy.p_fb >= 1.0:
                return DeleteAck(y.seq)
            if rng is None:
                raise InvalidParameterError("probabilistic feedback requires an rng")
            if rng.random() < policy.p_fb:
                return DeleteAck(y.seq)
        return None

    return None


def _record_quantized(policy: FeedbackPolicy, y: EncodingSymbol, dist: int) -> None:
    # ratio >= 1/2 means the majority of neighbors are still undecoded
    bit = 0 if dist / y.degree >= 0.5 else 1
    if not policy._bits:
        policy._first_seq = y.seq
    policy._bits.append(bit)


def _flush_quantized(policy: FeedbackPolicy) -> QuantizedReport:
    report = QuantizedReport(first_seq=policy._first_seq, bits=tuple(policy._bits))
    policy._bits.clear()
    policy._first_seq = -1
    return report


def _reset_bundles(policy: FeedbackPolicy) -> None:
    policy._entries.clear()
    policy._bits.clear()
    policy._first_seq = -1


_TAGS = {DistanceReport: 0, QuantizedReport: 1, DeleteAck: 2, Terminate: 3}
_U16 = 0xFFFF
_U32 = 0xFFFFFFFF


def encode_wire(msg: FeedbackMessage) -> bytes:
    """Fixed little-endian layout; see decode_wire for the inverse."""
    if isinstance(msg, DistanceReport):
        if len(msg.entries) > _U16:
            raise WireEncodeError("too many report entries for u16 count")
        out = bytearray([0])
        out += struct.pack("<H", len(msg.entries))
        for seq, d in msg.entries:
            if seq > _U32 or d > _U16 or seq < 0 or d < 0:
                raise WireEncodeError(f"entry ({seq}, {d}) exceeds field widths")
            out += struct.pack("<IH", seq, d)
        return bytes(out)
    if isinstance(msg, QuantizedReport):
        if msg.first_seq > _U32 or msg.first_seq < 0 or len(msg.bits) > _U16:
            raise WireEncodeError("quantized report exceeds field widths")
        out = bytearray([1])
        out += struct.pack("<IH", msg.first_seq, len(msg.bits))
        packed = bytearray((len(msg.bits) + 7) // 8)
        for i, bit in enumerate(msg.bits):
            if bit:
                packed[i // 8] |= 1 << (i % 8)
        out += packed
        return bytes(out)
    if isinstance(msg, DeleteAck):
        if msg.seq > _U32 or msg.seq < 0:
            raise WireEncodeError(f"seq {msg.seq} exceeds u32")
        return bytes([2]) + struct.pack("<I", msg.seq)
    if isinstance(msg, Terminate):
        return bytes([3])
    raise InvalidParameterError(f"not a feedback message: {msg!r}")


def decode_wire(data: bytes) -> FeedbackMessage:
    """Inverse of encode_wire; rejects truncated or unknown inputs."""
    if not data:
        raise MalformedMessageError("empty message")
    tag, body = data[0], data[1:]
    try:
        if tag == 0:
            (count,) = struct.unpack_from("<H", body, 0)
            entries = []
            off = 2
            for _ in range(count):
                seq, d = struct.unpack_from("<IH", body, off)
                entries.append((seq, d))
                off += 6
            _expect_len(body, off)
            return DistanceReport(tuple(entries))
        if tag == 1:
            first_seq, count = struct.unpack_from("<IH", body, 0)
            nbytes = (count + 7) // 8
            _expect_len(body, 6 + nbytes)
            bits = tuple((body[6 + i // 8] >> (i % 8)) & 1 for i in range(count))
            return QuantizedReport(first_seq=first_seq, bits=bits)
        if tag == 2:
            (seq,) = struct.unpack_from("<I", body, 0)
            _expect_len(body, 4)
            return DeleteAck(seq)
        if tag == 3:
            _expect_len(body, 0)
            return Terminate()
    except struct.error as exc:
        raise MalformedMessageError(f"truncated message: {exc}") from None
    raise MalformedMessageError(f"unknown tag {tag}")


def _expect_len(body: bytes, expected: int) -> None:
    if len(body) != expected:
        raise MalformedMessageError(
            f"message length {len(body) + 1} does not match contents"
        )


def feedback_bit_cost(msg: FeedbackMessage, d_max: int | None = None) -> int:
    """Information bits a message charges against the feedback budget.

    DistanceReport entries cost ceil(log2(d_max + 1)) bits each and need
    d_max (the scheme's maximum degree). Quantized bits cost 1 each, a
    DeleteAck costs 1, and Terminate is free: every scheme needs some stop
    signal, so it is excluded from comparisons.
    """
    if isinstance(msg, DistanceReport):
        if d_max is None:
            raise InvalidParameterError("DistanceReport cost requires d_max")
        return len(msg.entries) * math.ceil(math.log2(d_max + 1))
    if isinstance(msg, QuantizedReport):
        return len(msg.bits)
    if isinstance(msg, DeleteAck):
        return 1
    if isinstance(msg, Terminate):
        return 0
    raise InvalidParameterError(f"not a feedback message: {msg!r}")
