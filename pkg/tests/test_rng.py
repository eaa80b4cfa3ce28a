"""Tests for seed derivation and the replica-parallel map."""

import time

import numpy as np
import pytest

from gffforge.rng import GOLDEN, derived_seed, parallel_map, replica_rng, thread_count


def test_derived_seed_is_deterministic_and_distinct():
    assert derived_seed(123, 0) == 123
    assert derived_seed(123, 1) == 123 ^ GOLDEN
    seeds = {derived_seed(7, k) for k in range(1000)}
    assert len(seeds) == 1000
    with pytest.raises(ValueError):
        derived_seed(7, -1)


def test_replica_rng_streams():
    a = replica_rng(42, 3).standard_normal(8)
    b = replica_rng(42, 3).standard_normal(8)
    c = replica_rng(42, 4).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv("GFFFORGE_THREADS", raising=False)
    assert thread_count() >= 1
    monkeypatch.setenv("GFFFORGE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("GFFFORGE_THREADS", "0")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv("GFFFORGE_THREADS", "many")
    with pytest.raises(ValueError):
        thread_count()


def test_parallel_map_preserves_input_order(monkeypatch):
    def slow_identity(k):
        # later items finish first so pool scheduling would reorder them
        time.sleep(0.002 * (5 - k))
        return k

    monkeypatch.setenv("GFFFORGE_THREADS", "4")
    assert parallel_map(slow_identity, range(5)) == list(range(5))
    monkeypatch.setenv("GFFFORGE_THREADS", "1")
    assert parallel_map(lambda k: k * k, range(5)) == [0, 1, 4, 9, 16]
    assert parallel_map(lambda k: k, []) == []
