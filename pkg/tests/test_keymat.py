from types import SimpleNamespace

import numpy as np
import pytest

import reference_sim as ref
from neurokdc.errors import BoundExceeded, DimensionMismatch
from neurokdc.keymat import (
    FNV_OFFSET_BASIS,
    derive_key,
    deserialize_weights,
    fnv1a64,
    serialize_weights,
)
from neurokdc.rng import SplitMix64, gen_weights
from neurokdc.tpm import TpmParams, WeightMatrix


def mk(params, w):
    return WeightMatrix(params, np.array(w, dtype=np.int64))


class TestSerialize:
    def test_offset_mapping(self):
        p = TpmParams(1, 3, 3)
        assert list(serialize_weights(mk(p, [[-3, 0, 3]]))) == [0, 3, 6]

    def test_equal_matrices_equal_bytes(self):
        p = TpmParams(2, 4, 3)
        w = gen_weights(SplitMix64(5), p)
        assert serialize_weights(w) == serialize_weights(w.copy())

    def test_single_entry_difference_is_local(self):
        p = TpmParams(2, 4, 3)
        w = gen_weights(SplitMix64(5), p)
        other = w.copy()
        other.w[1, 2] = -other.w[1, 2] if other.w[1, 2] != 0 else 1
        a, b = serialize_weights(w), serialize_weights(other)
        assert sum(x != y for x, y in zip(a, b)) == 1

    def test_round_trip(self):
        p = TpmParams(3, 5, 4)
        w = gen_weights(SplitMix64(123), p)
        assert deserialize_weights(serialize_weights(w), p) == w

    def test_deserialize_length_check(self):
        with pytest.raises(DimensionMismatch):
            deserialize_weights(b"\x00\x01", TpmParams(1, 3, 1))

    def test_deserialize_range_check(self):
        with pytest.raises(BoundExceeded):
            deserialize_weights(bytes([9]), TpmParams(1, 1, 1))

    def test_bound_guard(self):
        # params objects from TpmParams cap l at 127; the guard still holds
        # for anything duck-typed past that cap.
        fake = SimpleNamespace(k=1, n=1, l=200)
        w = WeightMatrix.__new__(WeightMatrix)
        w.params = fake
        w.w = np.array([[5]], dtype=np.int64)
        with pytest.raises(BoundExceeded):
            serialize_weights(w)

    def test_matches_oracle(self):
        p = TpmParams(3, 4, 3)
        w = gen_weights(SplitMix64(77), p)
        assert serialize_weights(w) == ref.serialize(w.w.tolist(), 3)


class TestFnv1a64:
    def test_empty_is_offset_basis(self):
        assert fnv1a64(b"") == FNV_OFFSET_BASIS == 0xCBF29CE484222325

    def test_single_octet_golden(self):
        # frozen from the one-loop oracle
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"a") == ref.fnv1a64(b"a")

    def test_matches_oracle_on_random_data(self):
        g = SplitMix64(100)
        for _ in range(50):
            data = bytes(v & 0xFF for v in g.next_block(32).tolist())
            assert fnv1a64(data) == ref.fnv1a64(data)

    def test_collision_smoke(self):
        # 10**4 random single-octet perturbations, no fingerprint collision
        g = SplitMix64(200)
        collisions = 0
        for _ in range(10_000):
            data = bytearray(v & 0xFF for v in g.next_block(16).tolist())
            pos = g.next_u64() % len(data)
            mutated = bytearray(data)
            mutated[pos] ^= 1 + (g.next_u64() % 255)
            collisions += fnv1a64(bytes(data)) == fnv1a64(bytes(mutated))
        assert collisions == 0


class TestDeriveKey:
    def test_equal_weights_equal_material(self):
        p = TpmParams(3, 11, 3)
        w = gen_weights(SplitMix64(4), p)
        assert derive_key(w) == derive_key(w.copy())

    def test_length_is_k_times_n(self):
        p = TpmParams(3, 11, 3)
        key = derive_key(gen_weights(SplitMix64(4), p))
        assert len(key.bytes) == 33

    def test_fingerprint_is_hash_of_bytes(self):
        p = TpmParams(2, 3, 2)
        key = derive_key(gen_weights(SplitMix64(9), p))
        assert key.fingerprint == fnv1a64(key.bytes)

    def test_single_flip_sensitivity(self):
        # flipping any one weight changes the fingerprint in >= 99.9%
        # of 10**4 random single-flip trials
        p = TpmParams(3, 11, 3)
        g = SplitMix64(321)
        unchanged = 0
        trials = 10_000
        for _ in range(trials):
            w = gen_weights(g, p)
            fp_before = derive_key(w).fingerprint
            flat = w.w.reshape(-1)
            pos = g.next_u64() % flat.size
            old = flat[pos]
            candidates = [v for v in range(-p.l, p.l + 1) if v != old]
            flat[pos] = candidates[g.next_u64() % len(candidates)]
            unchanged += derive_key(w).fingerprint == fp_before
        assert unchanged / trials <= 0.001
