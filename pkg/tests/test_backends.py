import os
import subprocess
import sys

import numpy as np
import pytest

from neurokdc import backends
from neurokdc.backends import _numpy
from neurokdc.keymat import fnv1a64, serialize_weights
from neurokdc.rng import SplitMix64, gen_weights
from neurokdc.tpm import RULES, TpmParams, compute_output, update_weights

numba_backend = pytest.importorskip("neurokdc.backends._numba")


def _weights(seed, params):
    return gen_weights(SplitMix64(seed), params).w.copy()


CASES = [
    # (k, n, l, rule_code, max_rounds, window, input_seed, seed_a, seed_b)
    (3, 11, 3, 0, 100_000, 50, 1, 2, 3),
    (3, 11, 3, 1, 100_000, 50, 1, 2, 3),
    (3, 11, 3, 2, 100_000, 50, 1, 2, 3),
    (2, 5, 2, 0, 5_000, 10, 9, 8, 7),
    (4, 6, 4, 0, 2_000, 25, 42, 43, 44),  # may time out; still must agree
    (1, 1, 1, 0, 100, 1, 0, 1, 2),
]


@pytest.mark.parametrize("case", CASES)
def test_session_loops_bit_identical(case):
    k, n, l, rule, cap, window, input_seed, sa, sb = case
    params = TpmParams(k, n, l)
    wa_np, wb_np = _weights(sa, params), _weights(sb, params)
    wa_nb, wb_nb = wa_np.copy(), wb_np.copy()
    got_np = _numpy.session_loop(k, n, l, rule, cap, window, input_seed, wa_np, wb_np)
    got_nb = numba_backend.session_loop(k, n, l, rule, cap, window, input_seed, wa_nb, wb_nb)
    assert tuple(got_np) == tuple(got_nb)
    assert np.array_equal(wa_np, wa_nb)
    assert np.array_equal(wb_np, wb_nb)


@pytest.mark.parametrize("rule", [0, 1, 2])
def test_attack_loops_bit_identical(rule):
    params = TpmParams(3, 7, 3)
    args = (3, 7, 3, rule, 50_000, 50, 5)
    ws_np = [_weights(s, params) for s in (1, 2, 3)]
    ws_nb = [w.copy() for w in ws_np]
    got_np = _numpy.attack_loop(*args, *ws_np)
    got_nb = numba_backend.attack_loop(*args, *ws_nb)
    assert tuple(got_np) == tuple(got_nb)
    for a, b in zip(ws_np, ws_nb):
        assert np.array_equal(a, b)


def test_numpy_helpers_match_public_ops():
    params = TpmParams(3, 6, 3)
    g = SplitMix64(77)
    w = gen_weights(g, params)
    state, x = _numpy._next_input(17, 3, 6)
    from neurokdc.tpm import InputVector

    xv = InputVector(params, x)
    trace = compute_output(w, xv)
    sigma, tau = _numpy._machine(w.w, x)
    assert np.array_equal(sigma, trace.sigma)
    assert tau == trace.tau

    for rule_code, rule in enumerate(RULES):
        p = TpmParams(3, 6, 3, rule=rule)
        wm = gen_weights(SplitMix64(5), p)
        raw = wm.w.copy()
        _numpy._apply(raw, x, trace.sigma, trace.tau, rule_code, 3)
        want = update_weights(wm, xv, trace, trace.tau)
        assert np.array_equal(raw, want.w)

    assert _numpy._fingerprint(w.w, 3) == fnv1a64(serialize_weights(w))


def test_numpy_input_block_matches_generator():
    state, x = _numpy._next_input(4242, 4, 5)
    g = SplitMix64(4242)
    want = [[1 if g.next_u64() & 1 else -1 for _ in range(5)] for _ in range(4)]
    assert x.tolist() == want
    assert state == g.state


def test_env_flag_selects_backend():
    code = ("from neurokdc import backends; "
            "print(backends.backend_name())")
    for value, expected in (("numpy", "numpy"), ("numba", "numba"), ("auto", "numba")):
        env = dict(os.environ, NEUROKDC_BACKEND=value)
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == expected


def test_env_flag_rejects_unknown_value():
    env = dict(os.environ, NEUROKDC_BACKEND="cuda")
    code = "from neurokdc import backends; backends.active_backend()"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0
    assert "NEUROKDC_BACKEND" in out.stderr


def test_module_level_dispatch_runs():
    params = TpmParams(2, 3, 1)
    wa, wb = _weights(1, params), _weights(1, params)
    synced, rounds, updates = backends.session_loop(2, 3, 1, 0, 100, 5, 3, wa, wb)
    assert synced and rounds == 5 and updates == 5
