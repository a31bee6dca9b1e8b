"""Deterministic pseudorandom generation for inputs and initial weights.

Every random draw in the toolkit comes from SplitMix64 so that a session,
an experiment sweep or a wire transcript is reproducible bit for bit from
its seeds, on any platform. One full 64-bit draw is spent per generated
entry; wasteful, but it leaves no room for bit-ordering disagreements.
"""

from __future__ import annotations

import numpy as np

from .tpm import InputVector, TpmParams, WeightMatrix

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 generator: 64-bit state, one output per step."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_block(self, count: int) -> np.ndarray:
        """Vectorized batch of the next `count` outputs (uint64 array).

        Bit-identical to `count` calls of next_u64: the state advances by a
        fixed increment, so the block is a pure function of the start state.
        """
        start = np.uint64(self.state)
        gamma = np.uint64(_GAMMA)
        states = start + gamma * np.arange(1, count + 1, dtype=np.uint64)
        z = states
        z = (z ^ (z >> 30)) * np.uint64(_MIX1)
        z = (z ^ (z >> 27)) * np.uint64(_MIX2)
        out = z ^ (z >> 31)
        self.state = (self.state + count * _GAMMA) & MASK64
        return out


def gen_input(g: SplitMix64, params: TpmParams) -> InputVector:
    """Draw a fresh +/-1 input matrix, one 64-bit draw per entry, row-major.

    An entry is +1 when the draw's low bit is set, else -1.
    """
    draws = g.next_block(params.k * params.n)
    x = np.where(draws & np.uint64(1), 1, -1).astype(np.int64)
    return InputVector(params, x.reshape(params.k, params.n))


def gen_weights(g: SplitMix64, params: TpmParams) -> WeightMatrix:
    """Draw initial weights uniformly in [-l, +l], row-major.

    An entry is (draw mod (2l+1)) - l; the modulo bias at 2l+1 << 2**64 is
    negligible for simulation purposes.
    """
    draws = g.next_block(params.k * params.n)
    span = np.uint64(2 * params.l + 1)
    w = (draws % span).astype(np.int64) - params.l
    return WeightMatrix(params, w.reshape(params.k, params.n))
