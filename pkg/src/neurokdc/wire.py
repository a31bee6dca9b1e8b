"""Framed binary protocol between the KDC and its clients.

Frame layout: one message-type octet, a 4-octet big-endian payload length,
then the payload. All multi-octet integers are big-endian. Payloads are
capped at 1 MiB. The codec is a bijection on valid messages and never
consumes past one frame.

Message payloads:

    HELLO       session_id u64, role octet (A/B/E), k u16, n u16, l u8, rule u8
    START       round u32
    INPUT       round u32, then ceil(k*n/8) packed octets, MSB first,
                bit 1 -> +1, index order i*n+j, trailing bits zero
    OUTPUT      round u32, tau octet (0x01 -> +1, 0xFF -> -1)
    SYNC_PROBE  round u32, fingerprint u64
    SYNC_OK     empty
    SYNC_FAIL   empty
    ABORT       reason u8
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedPayload, Oversize, Truncated, UnknownType

MAX_PAYLOAD = 1 << 20

T_HELLO = 0x01
T_START = 0x02
T_INPUT = 0x03
T_OUTPUT = 0x04
T_SYNC_PROBE = 0x05
T_SYNC_OK = 0x06
T_SYNC_FAIL = 0x07
T_ABORT = 0x08

ROLE_A = 0x41
ROLE_B = 0x42
ROLE_E = 0x45
ROLES = (ROLE_A, ROLE_B, ROLE_E)

TAU_PLUS = 0x01
TAU_MINUS = 0xFF

ABORT_PARAM_MISMATCH = 1
ABORT_ROUND_CAP = 2
ABORT_PEER_FAILURE = 3
ABORT_LATE_JOIN = 4


@dataclass(frozen=True)
class Hello:
    session_id: int
    role: int
    k: int
    n: int
    l: int
    rule: int


@dataclass(frozen=True)
class Start:
    round: int


@dataclass(frozen=True)
class RoundInput:
    round: int
    packed: bytes


@dataclass(frozen=True)
class RoundOutput:
    round: int
    tau: int  # -1 or +1


@dataclass(frozen=True)
class SyncProbe:
    round: int
    fingerprint: int


@dataclass(frozen=True)
class SyncOk:
    pass


@dataclass(frozen=True)
class SyncFail:
    pass


@dataclass(frozen=True)
class Abort:
    reason: int


Message = Hello | Start | RoundInput | RoundOutput | SyncProbe | SyncOk | SyncFail | Abort


def _frame(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise Oversize(f"payload {len(payload)} exceeds {MAX_PAYLOAD}")
    return struct.pack(">BI", msg_type, len(payload)) + payload


def encode(m: Message) -> bytes:
    """Exact wire bytes for one message."""
    if isinstance(m, Hello):
        if m.role not in ROLES:
            raise MalformedPayload(f"bad role octet {m.role:#04x}")
        if m.rule not in (0, 1, 2):
            raise MalformedPayload(f"bad rule octet {m.rule}")
        return _frame(T_HELLO, struct.pack(">QBHHBB", m.session_id, m.role,
                                           m.k, m.n, m.l, m.rule))
    if isinstance(m, Start):
        return _frame(T_START, struct.pack(">I", m.round))
    if isinstance(m, RoundInput):
        return _frame(T_INPUT, struct.pack(">I", m.round) + m.packed)
    if isinstance(m, RoundOutput):
        if m.tau not in (-1, 1):
            raise MalformedPayload(f"tau must be -1 or +1, got {m.tau}")
        octet = TAU_PLUS if m.tau == 1 else TAU_MINUS
        return _frame(T_OUTPUT, struct.pack(">IB", m.round, octet))
    if isinstance(m, SyncProbe):
        return _frame(T_SYNC_PROBE, struct.pack(">IQ", m.round, m.fingerprint))
    if isinstance(m, SyncOk):
        return _frame(T_SYNC_OK, b"")
    if isinstance(m, SyncFail):
        return _frame(T_SYNC_FAIL, b"")
    if isinstance(m, Abort):
        return _frame(T_ABORT, struct.pack(">B", m.reason))
    raise TypeError(f"not a wire message: {m!r}")


def _parse(msg_type: int, payload: bytes) -> Message:
    if msg_type == T_HELLO:
        if len(payload) != 15:
            raise MalformedPayload(f"HELLO payload must be 15 octets, got {len(payload)}")
        session_id, role, k, n, l, rule = struct.unpack(">QBHHBB", payload)
        if role not in ROLES:
            raise MalformedPayload(f"bad role octet {role:#04x}")
        if rule not in (0, 1, 2):
            raise MalformedPayload(f"bad rule octet {rule}")
        return Hello(session_id, role, k, n, l, rule)
    if msg_type == T_START:
        if len(payload) != 4:
            raise MalformedPayload("START payload must be 4 octets")
        return Start(struct.unpack(">I", payload)[0])
    if msg_type == T_INPUT:
        if len(payload) < 4:
            raise MalformedPayload("INPUT payload shorter than its round field")
        return RoundInput(struct.unpack(">I", payload[:4])[0], payload[4:])
    if msg_type == T_OUTPUT:
        if len(payload) != 5:
            raise MalformedPayload("OUTPUT payload must be 5 octets")
        rnd, octet = struct.unpack(">IB", payload)
        if octet == TAU_PLUS:
            return RoundOutput(rnd, 1)
        if octet == TAU_MINUS:
            return RoundOutput(rnd, -1)
        raise MalformedPayload(f"bad tau octet {octet:#04x}")
    if msg_type == T_SYNC_PROBE:
        if len(payload) != 12:
            raise MalformedPayload("SYNC_PROBE payload must be 12 octets")
        rnd, fp = struct.unpack(">IQ", payload)
        return SyncProbe(rnd, fp)
    if msg_type == T_SYNC_OK:
        if payload:
            raise MalformedPayload("SYNC_OK carries no payload")
        return SyncOk()
    if msg_type == T_SYNC_FAIL:
        if payload:
            raise MalformedPayload("SYNC_FAIL carries no payload")
        return SyncFail()
    if msg_type == T_ABORT:
        if len(payload) != 1:
            raise MalformedPayload("ABORT payload must be 1 octet")
        return Abort(payload[0])
    raise UnknownType(f"unassigned message type {msg_type:#04x}")


def decode(data: bytes) -> tuple[Message, int]:
    """Parse exactly one frame from the head of `data`.

    Returns (message, octets consumed). Raises Truncated when more bytes
    are needed, and typed errors for everything else.
    """
    if len(data) < 5:
        raise Truncated("frame header needs 5 octets")
    msg_type, length = struct.unpack(">BI", data[:5])
    if length > MAX_PAYLOAD:
        raise Oversize(f"declared payload {length} exceeds {MAX_PAYLOAD}")
    if len(data) < 5 + length:
        raise Truncated(f"need {5 + length} octets, have {len(data)}")
    return _parse(msg_type, data[5 : 5 + length]), 5 + length


def pack_inputs(x: np.ndarray) -> bytes:
    """Pack a +/-1 matrix into MSB-first bits, +1 -> 1, zero padded."""
    bits = (x.reshape(-1) == 1).astype(np.uint8)
    return np.packbits(bits).tobytes()


def unpack_inputs(packed: bytes, k: int, n: int) -> np.ndarray:
    """Inverse of pack_inputs for a known geometry; validates the length."""
    expected = (k * n + 7) // 8
    if len(packed) != expected:
        raise MalformedPayload(
            f"INPUT carries {len(packed)} packed octets, geometry needs {expected}"
        )
    bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[: k * n]
    return np.where(bits == 1, 1, -1).astype(np.int64).reshape(k, n)
