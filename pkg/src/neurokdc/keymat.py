"""Key bytes and fingerprints from synchronized weights.

The raw secret is the weight matrix itself. Its canonical byte form is
row-major with each entry offset by +l, one octet per weight, which is
bijective for l <= 127. The 64-bit FNV-1a digest of those bytes is the
sync-probe fingerprint: cheap, dependency-free, and non-invertible enough
that publishing it leaks nothing useful about the weights. It is not
collision-resistant against an adversary, and does not need to be: a
forged fingerprint gains a listener nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundExceeded, DimensionMismatch
from .tpm import MAX_WEIGHT_BOUND, TpmParams, WeightMatrix

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x00000100000001B3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class KeyMaterial:
    """Canonical key bytes (length k*n) plus their 64-bit fingerprint."""

    bytes: bytes
    fingerprint: int


def serialize_weights(w: WeightMatrix) -> bytes:
    """Row-major octets, each weight emitted as (value + l) in [0, 2l]."""
    l = w.params.l
    if l > MAX_WEIGHT_BOUND:
        raise BoundExceeded(f"l={l} does not fit one octet per weight")
    return (w.w + l).astype(np.uint8).tobytes()


def deserialize_weights(data: bytes, params: TpmParams) -> WeightMatrix:
    """Inverse of serialize_weights; exists so tests can prove the round-trip."""
    if len(data) != params.k * params.n:
        raise DimensionMismatch(
            f"key length {len(data)} != k*n = {params.k * params.n}"
        )
    vals = np.frombuffer(data, dtype=np.uint8).astype(np.int64) - params.l
    if np.any(np.abs(vals) > params.l):
        raise BoundExceeded("octet outside [0, 2l]")
    return WeightMatrix(params, vals.reshape(params.k, params.n))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a: xor each octet into the state, multiply by the prime."""
    h = FNV_OFFSET_BASIS
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def fingerprint_weights(w: WeightMatrix) -> int:
    return fnv1a64(serialize_weights(w))


def derive_key(w: WeightMatrix) -> KeyMaterial:
    """Canonical key bytes plus fingerprint for a (synchronized) machine."""
    data = serialize_weights(w)
    return KeyMaterial(bytes=data, fingerprint=fnv1a64(data))
