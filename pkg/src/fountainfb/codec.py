"""Symbols, XOR arithmetic, distance, the peeling decoder, and GF(2) ML decoding."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DataCorruptionError, InvalidParameterError


@dataclass(frozen=True)
class InputBlock:
    """The k input symbols; all payloads share one length."""

    payloads: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if not self.payloads:
            raise InvalidParameterError("block must contain at least one symbol")
        size = len(self.payloads[0])
        if any(len(p) != size for p in self.payloads):
            raise InvalidParameterError("all payloads must have equal length")
        object.__setattr__(self, "payloads", tuple(bytes(p) for p in self.payloads))

    @property
    def k(self) -> int:
        return len(self.payloads)

    @property
    def symbol_size(self) -> int:
        return len(self.payloads[0])


def random_block(k: int, symbol_size: int, rng: np.random.Generator) -> InputBlock:
    """Random payloads; content is irrelevant to metrics but exercises the XOR path."""
    if k < 1 or symbol_size < 1:
        raise InvalidParameterError("k and symbol_size must be >= 1")
    raw = rng.integers(0, 256, size=(k, symbol_size), dtype=np.uint8)
    return InputBlock(tuple(row.tobytes() for row in raw))


@dataclass(frozen=True)
class EncodingSymbol:
    """One transmission: sequence number, neighbor index set, XOR payload."""

    seq: int
    neighbors: tuple[int, ...]
    payload: bytes

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise InvalidParameterError("seq must be nonnegative")
        if not self.neighbors:
            raise InvalidParameterError("neighbor set must be nonempty")
        nb = tuple(sorted(self.neighbors))
        if any(a == b for a, b in zip(nb, nb[1:])) or nb[0] < 0:
            raise InvalidParameterError(f"invalid neighbor set {self.neighbors}")
        object.__setattr__(self, "neighbors", nb)

    @property
    def degree(self) -> int:
        return len(self.neighbors)


def xor_combine(block: InputBlock, neighbors: Iterable[int]) -> bytes:
    """Byte-wise XOR of the selected payloads."""
    neighbors = tuple(neighbors)
    if not neighbors:
        raise InvalidParameterError("cannot combine an empty neighbor set")
    if any(not 0 <= j < block.k for j in neighbors):
        raise InvalidParameterError(f"neighbor index out of range in {neighbors}")
    out = bytearray(block.payloads[neighbors[0]])
    for j in neighbors[1:]:
        p = block.payloads[j]
        for i in range(len(out)):
            out[i] ^= p[i]
    return bytes(out)


def distance(y: EncodingSymbol, recovered: Iterable[int]) -> int:
    """Neighbors of y not yet recovered (computed against the set as given)."""
    rec = set(recovered)
    return sum(1 for j in y.neighbors if j not in rec)


class DecoderState:
    """Peeling decoder state: recovered payloads plus reduced pending symbols.

    Pending symbols are kept eagerly reduced: their residual neighbor sets
    never intersect the recovered set, and always have residual degree >= 2.
    """

    def __init__(self, k: int):
        if k < 1:
            raise InvalidParameterError("k must be >= 1")
        self.k = k
        self.recovered: dict[int, bytes] = {}
        self._pending: dict[int, tuple[set[int], bytearray]] = {}
        self._by_neighbor: dict[int, set[int]] = {}
        self._next_id = 0

    @property
    def recovered_set(self) -> set[int]:
        return set(self.recovered)

    @property
    def done(self) -> bool:
        return len(self.recovered) == self.k

    def pending_count(self) -> int:
        return len(self._pending)

    def _recover(self, j: int, payload: bytes, order: list[int]) -> None:
        prior = self.recovered.get(j)
        if prior is not None:
            if prior != payload:
                raise DataCorruptionError(f"conflicting recovery for input {j}")
            return
        self.recovered[j] = payload
        order.append(j)

    def peel(self, y: EncodingSymbol) -> list[int]:
        """Absorb one symbol; return newly recovered indices in recovery order."""
        residual = set(j for j in y.neighbors if j not in self.recovered)
        payload = bytearray(y.payload)
        for j in y.neighbors:
            known = self.recovered.get(j)
            if known is not None:
                for i in range(len(payload)):
                    payload[i] ^= known[i]
        order: list[int] = []
        if not residual:
            return order

        if len(residual) >= 2:
            eid = self._next_id
            self._next_id += 1
            self._pending[eid] = (residual, payload)
            for j in residual:
                self._by_neighbor.setdefault(j, set()).add(eid)
            return order

        # residual degree 1: release, then propagate through the buffer
        queue = [(residual.pop(), bytes(payload))]
        while queue:
            j, value = queue.pop()
            if j in self.recovered:
                self._recover(j, value, order)  # consistency check only
                continue
            self._recover(j, value, order)
            for eid in self._by_neighbor.pop(j, ()):
                nbs, data = self._pending[eid]
                nbs.discard(j)
                for i in range(len(data)):
                    data[i] ^= value[i]
                if len(nbs) == 1:
                    del self._pending[eid]
                    last = next(iter(nbs))
                    self._by_neighbor[last].discard(eid)
                    queue.append((last, bytes(data)))
        return order


def peel(state: DecoderState, y: EncodingSymbol) -> list[int]:
    return state.peel(y)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Received symbols as GF(2) rows (bitmask ints, bit j = input j) plus payloads."""

    k: int
    rows: tuple[int, ...]
    rhs: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if len(self.rows) != len(self.rhs):
            raise InvalidParameterError("rows and rhs lengths differ")
        mask = (1 << self.k) - 1
        if any(r == 0 or r & ~mask for r in self.rows):
            raise InvalidParameterError("row bits out of range")

    @classmethod
    def from_symbols(cls, k: int, symbols: Sequence[EncodingSymbol]) -> "GeneratorMatrix":
        rows = []
        rhs = []
        for y in symbols:
            bits = 0
            for j in y.neighbors:
                if j >= k:
                    raise InvalidParameterError(f"neighbor {j} out of range for k={k}")
                bits |= 1 << j
            rows.append(bits)
            rhs.append(y.payload)
        return cls(k, tuple(rows), tuple(rhs))


@dataclass(frozen=True)
class MLResult:
    """Outcome of GF(2) elimination: uniquely determined inputs and the rest.

    An index is unrecoverable when some null-space vector of the row space
    touches it, i.e. its value can be flipped without changing any received
    symbol. `determined` holds the unique payloads for all other indices.
    """

    k: int
    determined: dict[int, bytes]
    unrecoverable: frozenset[int]

    @property
    def complete(self) -> bool:
        return not self.unrecoverable

    @property
    def payloads(self) -> list[bytes] | None:
        if not self.complete:
            return None
        return [self.determined[j] for j in range(self.k)]


def ml_decode(g: GeneratorMatrix) -> MLResult:
    """Gaussian elimination over GF(2) with payload back-substitution."""
    k = g.k
    rows = list(g.rows)
    rhs = [bytearray(p) for p in g.rhs]
    size = len(rhs[0]) if rhs else 0
    if any(len(p) != size for p in rhs):
        raise InvalidParameterError("payload lengths differ")

    pivot_of_col: dict[int, int] = {}
    r = 0
    for col in range(k):
        bit = 1 << col
        src = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if src is None:
            continue
        rows[r], rows[src] = rows[src], rows[r]
        rhs[r], rhs[src] = rhs[src], rhs[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
                for b in range(size):
                    rhs[i][b] ^= rhs[r][b]
        pivot_of_col[col] = r
        r += 1

    for i in range(r, len(rows)):
        if rows[i] == 0 and any(rhs[i]):
            raise DataCorruptionError("inconsistent system: zero row with nonzero value")

    free_cols = [c for c in range(k) if c not in pivot_of_col]
    # null-space basis: one vector per free column; its support marks every
    # index whose value is not pinned down by the received rows
    unrecoverable = 0
    for c in free_cols:
        vec = 1 << c
        for col, prow in pivot_of_col.items():
            if rows[prow] & (1 << c):
                vec |= 1 << col
        unrecoverable |= vec

    determined = {}
    for col, prow in pivot_of_col.items():
        if not unrecoverable & (1 << col):
            determined[col] = bytes(rhs[prow])
    return MLResult(
        k=k,
        determined=determined,
        unrecoverable=frozenset(c for c in range(k) if unrecoverable & (1 << c)),
    )
