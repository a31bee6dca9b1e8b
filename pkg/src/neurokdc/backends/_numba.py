"""JIT-compiled session loops. Same contract as _numpy, orders of magnitude
faster for experiment sweeps: the whole round loop (input generation,
machine evaluation, updates, probe fingerprints) runs as one nopython
kernel over int64/uint64 arrays.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)

_FNV_BASIS = U64(0xCBF29CE484222325)
_FNV_PRIME = U64(0x00000100000001B3)


@njit(cache=True)
def _sm64(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return state, z ^ (z >> U64(31))


@njit(cache=True)
def _fill_input(state, x):
    k, n = x.shape
    for i in range(k):
        for j in range(n):
            state, v = _sm64(state)
            x[i, j] = np.int64(1) if v & U64(1) else np.int64(-1)
    return state


@njit(cache=True)
def _machine(w, x, sigma):
    k, n = w.shape
    tau = np.int64(1)
    for i in range(k):
        s = np.int64(0)
        for j in range(n):
            s += w[i, j] * x[i, j]
        sg = np.int64(1) if s > 0 else np.int64(-1)
        sigma[i] = sg
        tau *= sg
    return tau


@njit(cache=True)
def _apply(w, x, sigma, tau, rule, l):
    k, n = w.shape
    for i in range(k):
        if sigma[i] != tau:
            continue
        for j in range(n):
            if rule == 0:
                v = w[i, j] + x[i, j] * tau
            elif rule == 1:
                v = w[i, j] - x[i, j] * tau
            else:
                v = w[i, j] + x[i, j]
            if v > l:
                v = l
            elif v < -l:
                v = -l
            w[i, j] = v


@njit(cache=True)
def _fingerprint(w, l):
    k, n = w.shape
    h = _FNV_BASIS
    for i in range(k):
        for j in range(n):
            h = (h ^ U64(w[i, j] + l)) * _FNV_PRIME
    return h


@njit(cache=True)
def _session_kernel(k, n, l, rule, max_rounds, window, input_seed, wa, wb):
    chain = U64(input_seed)
    x = np.empty((k, n), dtype=np.int64)
    sig_a = np.empty(k, dtype=np.int64)
    sig_b = np.empty(k, dtype=np.int64)
    rounds = 0
    updates = 0
    streak = 0
    while rounds < max_rounds:
        chain = _fill_input(chain, x)
        tau_a = _machine(wa, x, sig_a)
        tau_b = _machine(wb, x, sig_b)
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


@njit(cache=True)
def _attack_kernel(k, n, l, rule, max_rounds, window, input_seed, wa, wb, we):
    chain = U64(input_seed)
    x = np.empty((k, n), dtype=np.int64)
    sig_a = np.empty(k, dtype=np.int64)
    sig_b = np.empty(k, dtype=np.int64)
    sig_e = np.empty(k, dtype=np.int64)
    rounds = 0
    updates = 0
    streak = 0
    while rounds < max_rounds:
        chain = _fill_input(chain, x)
        tau_a = _machine(wa, x, sig_a)
        tau_b = _machine(wb, x, sig_b)
        _machine(we, x, sig_e)
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


def session_loop(k, n, l, rule, max_rounds, window, input_seed, wa, wb):
    synced, rounds, updates = _session_kernel(
        k, n, l, rule, max_rounds, window, U64(input_seed), wa, wb
    )
    return bool(synced), int(rounds), int(updates)


def attack_loop(k, n, l, rule, max_rounds, window, input_seed, wa, wb, we):
    synced, rounds, updates = _attack_kernel(
        k, n, l, rule, max_rounds, window, U64(input_seed), wa, wb, we
    )
    return bool(synced), int(rounds), int(updates)


def warmup():
    """Trigger compilation of both kernels on a tiny session."""
    params = (1, 2, 1, 0, 8, 4, 1)
    wa = np.zeros((1, 2), dtype=np.int64)
    wb = np.zeros((1, 2), dtype=np.int64)
    we = np.zeros((1, 2), dtype=np.int64)
    session_loop(*params, wa, wb)
    attack_loop(*params, wa, wb, we)
