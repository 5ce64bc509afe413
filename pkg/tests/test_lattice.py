import hashlib
import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymerlab.lattice import (
    LatticeParams,
    MemoryGuardError,
    derive_seed,
    gaussian_env,
    is_valid_path,
    make_partition,
    make_subpartition,
    perturb_env,
    reachable_cells_total,
    reachable_set,
    reachable_set_size,
    zero_env,
)


def test_params_validation():
    with pytest.raises(ValueError):
        LatticeParams(d=0, N=10)
    with pytest.raises(ValueError):
        LatticeParams(d=1, N=0)


def test_memory_guard_at_construction():
    with pytest.raises(MemoryGuardError):
        gaussian_env(1, LatticeParams(d=2, N=512, max_cells=1000))
    gaussian_env(1, LatticeParams(d=1, N=512))  # well under the default cap


class TestEnvironment:
    def test_repeated_queries_identical(self):
        env = gaussian_env(42, LatticeParams(d=2, N=32))
        coords = np.array([[0, 2], [-1, 1], [3, -3]])
        a = env.values(7, coords)
        b = env.values(7, coords)
        assert np.array_equal(a, b)
        assert env.value(7, (0, 2)) == a[0]

    def test_distinct_seeds_decorrelated(self):
        params = LatticeParams(d=1, N=8)
        coords = (np.arange(100_000) - 50_000)[:, None]
        v1 = gaussian_env(1, params).values(3, coords)
        v2 = gaussian_env(2, params).values(3, coords)
        assert not np.any(v1 == v2)
        corr = np.corrcoef(v1, v2)[0, 1]
        assert abs(corr) < 3.0 / np.sqrt(100_000)

    def test_moments(self):
        env = gaussian_env(9, LatticeParams(d=1, N=8))
        coords = (np.arange(1_000_000) - 500_000)[:, None]
        v = env.values(5, coords)
        assert abs(v.mean()) < 0.01
        assert abs(v.var() - 1.0) < 0.01

    def test_layers_decorrelated(self):
        env = gaussian_env(3, LatticeParams(d=1, N=8))
        coords = (np.arange(100_000) - 50_000)[:, None]
        v1, v2 = env.values(1, coords), env.values(2, coords)
        assert abs(np.corrcoef(v1, v2)[0, 1]) < 3.0 / np.sqrt(100_000)

    def test_hash_identical_across_thread_counts(self):
        env = gaussian_env(101, LatticeParams(d=1, N=64))
        rng = np.random.default_rng(0)
        coords = rng.integers(-40, 41, size=(100, 100, 1))
        layers = rng.integers(1, 65, size=100)

        def digest(n_threads):
            def chunk(i):
                return env.values(int(layers[i]), coords[i]).tobytes()
            if n_threads == 1:
                parts = [chunk(i) for i in range(100)]
            else:
                with ThreadPoolExecutor(n_threads) as ex:
                    parts = list(ex.map(chunk, range(100)))
            return hashlib.sha256(b"".join(parts)).hexdigest()

        assert digest(1) == digest(8)

    def test_zero_env_and_perturbation(self):
        params = LatticeParams(d=1, N=8)
        z = zero_env(params)
        assert np.all(z.values(4, np.array([[0], [2]])) == 0.0)
        env = gaussian_env(5, params)
        pe = perturb_env(env, 3, (1,), 0.5)
        assert pe.value(3, (1,)) == env.value(3, (1,)) + 0.5
        assert pe.value(3, (-1,)) == env.value(3, (-1,))
        assert pe.value(4, (1,)) == env.value(4, (1,))


def test_derive_seed_stable_and_spread():
    seeds = [derive_seed(123, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert derive_seed(123, 7) == derive_seed(123, 7)
    assert derive_seed(123, 7) != derive_seed(124, 7)


class TestReachableSets:
    def test_origin(self):
        assert reachable_set(0, 1).tolist() == [[0]]

    def test_one_step_d2(self):
        pts = {tuple(p) for p in reachable_set(1, 2)}
        assert pts == {(1, 0), (-1, 0), (0, 1), (0, -1)}

    def test_i4_d1_against_walk_enumeration(self):
        # endpoints of all 2^4 walks
        ends = set()
        for steps in itertools.product((-1, 1), repeat=4):
            ends.add(sum(steps))
        assert sorted(ends) == [-4, -2, 0, 2, 4]
        assert reachable_set(4, 1).ravel().tolist() == [-4, -2, 0, 2, 4]

    @pytest.mark.parametrize("i", range(9))
    def test_sizes_d1_d2(self, i):
        assert reachable_set_size(i, 1) == i + 1
        assert reachable_set_size(i, 2) == (i + 1) ** 2
        assert len(reachable_set(i, 2)) == (i + 1) ** 2

    def test_d2_matches_walk_enumeration(self):
        # exact reachable positions after i steps, by direct expansion
        cur = {(0, 0)}
        for i in range(1, 9):
            cur = {
                (x + dx, y + dy)
                for (x, y) in cur
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            }
            assert {tuple(p) for p in reachable_set(i, 2)} == cur

    @pytest.mark.parametrize("d", [3, 4])
    def test_formula_matches_enumeration_high_d(self, d):
        for i in range(6):
            assert reachable_set_size(i, d) == len(reachable_set(i, d))

    def test_cells_total(self):
        assert reachable_cells_total(4, 1) == 1 + 2 + 3 + 4 + 5
        assert reachable_cells_total(3, 2) == 1 + 4 + 9 + 16
        total = sum(reachable_set_size(i, 3) for i in range(11))
        assert reachable_cells_total(10, 3) == total


class TestPaths:
    def test_examples(self):
        assert is_valid_path([[0], [1], [2]])
        assert not is_valid_path([[0], [2]])
        assert not is_valid_path([[1], [2]])

    def test_flat_input_and_origin_only(self):
        assert is_valid_path([0, -1, 0, 1])
        assert is_valid_path([[0, 0]])
        assert not is_valid_path([[0, 0], [1, 1]])


class TestPartitions:
    def test_examples(self):
        assert make_partition(10, 3).boundaries == (0, 3, 6, 10)
        assert make_partition(12, 4).boundaries == (0, 3, 6, 9, 12)
        assert make_partition(7, 7).boundaries == (0, 1, 2, 3, 4, 5, 6, 7)

    def test_rejects_l_above_n(self):
        with pytest.raises(ValueError):
            make_partition(5, 6)

    @settings(deadline=None, max_examples=200)
    @given(st.integers(1, 10_000), st.integers(1, 32))
    def test_block_size_envelope(self, n, L):
        if L > n:
            return
        p = make_partition(n, L)
        lo, hi = n // L, -(-n // L)
        for s in p.sizes:
            assert s in (lo, hi)
            assert n / (2 * L) <= s <= 2 * n / L

    def test_subpartition_examples(self):
        p = make_partition(100, 10)  # block size 10
        sub = make_subpartition(p, 1, 3)
        assert sorted(sub.sizes) == [3, 3, 4]
        p9 = make_partition(81, 9)
        sub9 = make_subpartition(p9, 2, 9)
        assert sub9.sizes == (1,) * 9
        # refinement count for delta = 0.5
        from polymerlab.localization import default_refinement
        assert default_refinement(0.5) == 24
        p4 = make_partition(100, 4)
        sub24 = make_subpartition(p4, 1, 24)
        assert len(sub24.sizes) == 24

    def test_oversized_k_flagged(self):
        p = make_partition(12, 4)  # block size 3
        sub = make_subpartition(p, 1, 5)
        assert sub.has_empty_blocks
        assert not make_subpartition(p, 1, 3).has_empty_blocks

    @settings(deadline=None, max_examples=200)
    @given(st.integers(1, 10_000), st.integers(1, 32), st.integers(1, 64))
    def test_subblock_size_envelope(self, n, L, K):
        if L > n or n // L < K:
            return
        p = make_partition(n, L)
        for ell in (1, p.L):
            sub = make_subpartition(p, ell, K)
            for s in sub.sizes:
                assert n / (4 * L * K) <= s <= 4 * n / (L * K)

    def test_windows(self):
        p = make_partition(10, 3)
        assert p.block_window(1) == (1, 3)
        assert p.block_window(3) == (7, 10)
        sub = make_subpartition(p, 3, 2)
        assert sub.sub_window(1) == (7, 8)
        assert sub.sub_window(2) == (9, 10)
