"""Pure-numpy session loop, the fallback when the JIT backend is off.

Per round the work is a batched SplitMix64 block plus a handful of small
vectorized array ops. Must stay bit-identical to the JIT backend; the
equivalence is pinned by tests.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_BASIS = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3


def _block(state: int, count: int) -> tuple[int, np.ndarray]:
    """Next `count` SplitMix64 outputs from `state` (python int), vectorized."""
    start = np.uint64(state)
    states = start + np.uint64(_GAMMA) * np.arange(1, count + 1, dtype=np.uint64)
    z = states
    z = (z ^ (z >> 30)) * np.uint64(_MIX1)
    z = (z ^ (z >> 27)) * np.uint64(_MIX2)
    out = z ^ (z >> 31)
    return (state + count * _GAMMA) & MASK64, out


def _next_input(state: int, k: int, n: int) -> tuple[int, np.ndarray]:
    state, draws = _block(state, k * n)
    x = np.where(draws & np.uint64(1), 1, -1).astype(np.int64)
    return state, x.reshape(k, n)


def _fingerprint(w: np.ndarray, l: int) -> int:
    h = _FNV_BASIS
    for b in (w + l).astype(np.uint8).tobytes():
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def _machine(w: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, int]:
    sums = np.sum(w * x, axis=1)
    sigma = np.where(sums > 0, 1, -1).astype(np.int64)
    return sigma, int(np.prod(sigma))


def _apply(w: np.ndarray, x: np.ndarray, sigma: np.ndarray, tau: int,
           rule: int, l: int):
    """In-place clamped one-step update of the rows whose sign equals tau."""
    if rule == 0:
        delta = x * tau
    elif rule == 1:
        delta = -x * tau
    else:
        delta = x
    rows = (sigma == tau)[:, np.newaxis]
    np.clip(w + np.where(rows, delta, 0), -l, l, out=w)


def session_loop(k: int, n: int, l: int, rule: int, max_rounds: int,
                 window: int, input_seed: int,
                 wa: np.ndarray, wb: np.ndarray):
    """Mutual-learning loop on two machines; mutates wa and wb in place.

    Returns (synced, rounds_elapsed, updates_applied).
    """
    chain = input_seed & MASK64
    rounds = 0
    updates = 0
    streak = 0
    while rounds < max_rounds:
        chain, x = _next_input(chain, k, n)
        sig_a, tau_a = _machine(wa, x)
        sig_b, tau_b = _machine(wb, x)
        if tau_a == tau_b:
            _apply(wa, x, sig_a, tau_a, rule, l)
            _apply(wb, x, sig_b, tau_b, rule, l)
            streak += 1
            updates += 1
        else:
            streak = 0
        rounds += 1
        if streak >= window:
            if _fingerprint(wa, l) == _fingerprint(wb, l):
                return True, rounds, updates
            streak = 0
    return False, rounds, updates


def attack_loop(k: int, n: int, l: int, rule: int, max_rounds: int,
                window: int, input_seed: int,
                wa: np.ndarray, wb: np.ndarray, we: np.ndarray):
    """Session loop plus a passive listener machine updated on agreements.

    The listener imitates the agreed output bit with its own hidden signs.
    Mutates all three weight matrices; returns (synced, rounds, updates).
    """
    chain = input_seed & MASK64
    rounds = 0
    updates = 0
    streak = 0
    while rounds < max_rounds:
        chain, x = _next_input(chain, k, n)
        sig_a, tau_a = _machine(wa, x)
        sig_b, tau_b = _machine(wb, x)
        sig_e, _ = _machine(we, x)
        if tau_a == tau_b:
            _apply(wa, x, sig_a, tau_a, rule, l)
            _apply(wb, x, sig_b, tau_b, rule, l)
            _apply(we, x, sig_e, tau_a, rule, l)
            streak += 1
            updates += 1
        else:
            streak = 0
        rounds += 1
        if streak >= window:
            if _fingerprint(wa, l) == _fingerprint(wb, l):
                return True, rounds, updates
            streak = 0
    return False, rounds, updates
