"""Counter-based random streams (Philox4x32-10).

A stream is addressed by ``(key, stream)``; draws walk a 64-bit block
counter. Every Philox block yields four 32-bit words, i.e. two doubles with
53 random bits each, so the state also carries the lane (0 or 1) of the next
double inside the current block.

The state is a plain immutable value. Drawing returns the value together
with the advanced state; nothing is mutated.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

_STATE_FORMAT = "<4Q"
STATE_NBYTES = struct.calcsize(_STATE_FORMAT)  # 32


def philox4x32(counter, key, rounds=PHILOX_ROUNDS):
    """Philox4x32 bijection of a 4-word counter under a 2-word key."""
    c0, c1, c2, c3 = (int(w) & MASK32 for w in counter)
    k0, k1 = (int(w) & MASK32 for w in key)
    for _ in range(rounds):
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> 32) ^ c1 ^ k0,
            p1 & MASK32,
            (p0 >> 32) ^ c3 ^ k1,
            p0 & MASK32,
        )
        k0 = (k0 + PHILOX_W0) & MASK32
        k1 = (k1 + PHILOX_W1) & MASK32
    return c0, c1, c2, c3


def words_to_double(hi, lo):
    """53-bit double in [0, 1) from two 32-bit words."""
    return ((hi >> 5) * 67108864 + (lo >> 6)) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class RngState:
    """Position in a Philox stream.

    ``key`` is the 64-bit master seed, ``stream`` the 64-bit stream id,
    ``counter`` the index of the current block and ``lane`` which half of
    that block the next draw uses.
    """

    key: int
    stream: int = 0
    counter: int = 0
    lane: int = 0

    def __post_init__(self):
        for name in ("key", "stream", "counter"):
            v = getattr(self, name)
            if not 0 <= v <= MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")
        if self.lane not in (0, 1):
            raise ValueError(f"lane must be 0 or 1, got {self.lane}")

    def block(self):
        ctr = (self.counter & MASK32, self.counter >> 32,
               self.stream & MASK32, self.stream >> 32)
        return philox4x32(ctr, (self.key & MASK32, self.key >> 32))

    def advanced(self):
        if self.lane == 0:
            return RngState(self.key, self.stream, self.counter, 1)
        return RngState(self.key, self.stream, (self.counter + 1) & MASK64, 0)

    def to_bytes(self) -> bytes:
        return struct.pack(_STATE_FORMAT, self.key, self.stream, self.counter, self.lane)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RngState":
        if len(data) != STATE_NBYTES:
            raise ValueError(f"expected {STATE_NBYTES} bytes, got {len(data)}")
        return cls(*struct.unpack(_STATE_FORMAT, data))


def uniform(state: RngState):
    """Return ``(u, next_state)`` with ``u`` uniform on [0, 1)."""
    w = state.block()
    if state.lane == 0:
        u = words_to_double(w[0], w[1])
    else:
        u = words_to_double(w[2], w[3])
    return u, state.advanced()


def derive_stream(master_seed: int, replicate_index: int) -> RngState:
    """Fresh state for replicate ``replicate_index`` under ``master_seed``.

    The map is injective: seed selects the Philox key and the replicate index
    occupies the upper half of the block counter, so two distinct pairs never
    share a block.
    """
    if replicate_index < 0:
        raise ValueError("replicate_index must be non-negative")
    return RngState(key=int(master_seed) & MASK64, stream=int(replicate_index))
