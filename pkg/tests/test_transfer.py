import math

import numpy as np
import pytest
from scipy import stats

from polymerlab.lattice import LatticeParams, gaussian_env, make_partition, zero_env
from polymerlab.transfer import (
    BetaProfile,
    backward_layers,
    brute_force_log_partition,
    endpoint_distribution,
    forward_layers,
    gibbs_enumeration,
    log_partition,
    log_partition_excluding_block,
    log_partition_multi,
    log_partitions,
    markov_split_logz,
    sample_path,
    sample_paths,
)


class TestBetaProfile:
    def test_validation(self):
        with pytest.raises(ValueError):
            BetaProfile(np.array([0.5, -0.1]))
        with pytest.raises(ValueError):
            BetaProfile(np.array([np.inf, 1.0]))

    def test_constructors(self):
        p = make_partition(10, 2)
        blocks = BetaProfile.from_blocks(p, [0.5, 1.5])
        assert blocks.values.tolist() == [0.5] * 5 + [1.5] * 5
        const = BetaProfile.constant(0.7, 10)
        assert np.array_equal(
            BetaProfile.from_blocks(p, [0.7, 0.7]).values, const.values
        )
        hat = BetaProfile.excluding_block(p, 1, 0.7)
        assert hat.values.tolist() == [0.0] * 5 + [0.7] * 5
        assert BetaProfile.constant(0.0, 4).is_zero
        assert not const.is_zero


class TestLogPartition:
    def test_zero_profile_exact(self):
        env = gaussian_env(4, LatticeParams(d=1, N=12))
        table = forward_layers(env, BetaProfile.constant(0.0, 12))
        assert log_partition(table) == 0.0

    def test_single_step_formula(self):
        env = gaussian_env(13, LatticeParams(d=1, N=1))
        beta = 0.8
        lz = log_partition(forward_layers(env, BetaProfile.constant(beta, 1)))
        g_right = env.value(1, (1,))
        g_left = env.value(1, (-1,))
        expect = math.log((math.exp(beta * g_right) + math.exp(beta * g_left)) / 2)
        assert abs(lz - expect) < 1e-12

    def test_oracle_n6(self):
        env = gaussian_env(42, LatticeParams(d=1, N=6))
        prof = BetaProfile.constant(1.3, 6)
        lz = log_partition(forward_layers(env, prof))
        assert abs(lz - brute_force_log_partition(env, prof)) < 1e-10

    def test_oracle_d2_n8(self):
        env = gaussian_env(7, LatticeParams(d=2, N=8))
        prof = BetaProfile.constant(0.7, 8)
        lz = log_partition(forward_layers(env, prof))
        assert abs(lz - brute_force_log_partition(env, prof)) < 1e-10

    @pytest.mark.parametrize("d,n", [(1, 7), (2, 6), (3, 4)])
    def test_oracle_random_profiles(self, d, n):
        rng = np.random.default_rng(d * 100 + n)
        for _ in range(5):
            env = gaussian_env(int(rng.integers(0, 2**62)), LatticeParams(d=d, N=n))
            prof = BetaProfile(rng.uniform(0.0, 3.0, size=n))
            lz = log_partitions(env, [prof])[0]
            assert abs(lz - brute_force_log_partition(env, prof)) < 1e-10

    def test_zero_environment_all_profiles(self):
        z = zero_env(LatticeParams(d=2, N=9))
        rng = np.random.default_rng(0)
        for _ in range(5):
            prof = BetaProfile(rng.uniform(0, 4, size=9))
            assert abs(log_partition(forward_layers(z, prof))) < 1e-12

    def test_sweep_matches_tables(self):
        env = gaussian_env(8, LatticeParams(d=2, N=10))
        profs = [BetaProfile.constant(b, 10) for b in (0.3, 1.1, 2.4)]
        swept = log_partitions(env, profs)
        single = [log_partition(forward_layers(env, pr)) for pr in profs]
        assert np.allclose(swept, single, rtol=0, atol=1e-12)

    def test_longdouble_reference(self):
        # finite at beta=5, N=2000 and within 1e-6 relative of extended precision
        env = gaussian_env(77, LatticeParams(d=1, N=2000))
        prof = BetaProfile.constant(5.0, 2000)
        lz64 = log_partitions(env, [prof])[0]
        lzld = log_partitions(env, [prof], dtype=np.longdouble)[0]
        assert np.isfinite(lz64)
        assert abs(lz64 - lzld) / abs(lzld) < 1e-6


class TestMultiTemperature:
    def test_equal_blocks_equal_constant(self):
        env = gaussian_env(3, LatticeParams(d=1, N=12))
        p = make_partition(12, 3)
        lz_multi = log_partition_multi(env, p, [0.9, 0.9, 0.9])
        lz_const = log_partitions(env, [BetaProfile.constant(0.9, 12)])[0]
        assert lz_multi == lz_const

    def test_zero_vector(self):
        env = gaussian_env(3, LatticeParams(d=1, N=12))
        assert log_partition_multi(env, make_partition(12, 3), [0, 0, 0]) == 0.0

    def test_against_brute_force(self):
        env = gaussian_env(3, LatticeParams(d=1, N=8))
        p = make_partition(8, 2)
        lz = log_partition_multi(env, p, [0.5, 1.5])
        bf = brute_force_log_partition(env, BetaProfile.from_blocks(p, [0.5, 1.5]))
        assert abs(lz - bf) < 1e-10


class TestExcludingBlock:
    def test_whole_interval_suppressed(self):
        env = gaussian_env(6, LatticeParams(d=1, N=10))
        assert log_partition_excluding_block(env, make_partition(10, 1), 1, 2.0) == 0.0

    def test_beta_zero(self):
        env = gaussian_env(6, LatticeParams(d=1, N=10))
        assert log_partition_excluding_block(env, make_partition(10, 2), 1, 0.0) == 0.0

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_ratio_identity_both_routes(self, ell):
        # log Z - log Zhat^(ell) computed by transfer matrix and by enumeration
        env = gaussian_env(21, LatticeParams(d=1, N=8))
        p = make_partition(8, 3)
        beta = 1.1
        full = BetaProfile.constant(beta, 8)
        lhs = log_partitions(env, [full])[0] - log_partition_excluding_block(
            env, p, ell, beta
        )
        rhs = brute_force_log_partition(env, full) - brute_force_log_partition(
            env, BetaProfile.excluding_block(p, ell, beta)
        )
        assert abs(lhs - rhs) < 1e-10


class TestSampling:
    def test_identical_stream_identical_path(self):
        env = gaussian_env(2, LatticeParams(d=2, N=12))
        table = forward_layers(env, BetaProfile.constant(0.9, 12))
        p1 = sample_path(table, np.random.default_rng(123))
        p2 = sample_path(table, np.random.default_rng(123))
        assert np.array_equal(p1, p2)

    def test_step_distribution_uniform_at_beta_zero(self):
        env = gaussian_env(2, LatticeParams(d=1, N=8))
        table = forward_layers(env, BetaProfile.constant(0.0, 8))
        paths = sample_paths(table, 20_000, np.random.default_rng(5))
        steps = np.diff(paths[:, :, 0], axis=1).ravel()
        counts = np.array([(steps == 1).sum(), (steps == -1).sum()])
        assert stats.chisquare(counts).pvalue > 0.001

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_sampled_paths_valid(self, d):
        from polymerlab.lattice import is_valid_path

        env = gaussian_env(d, LatticeParams(d=d, N=7))
        table = forward_layers(env, BetaProfile.constant(1.2, 7))
        paths = sample_paths(table, 64, np.random.default_rng(0))
        assert all(is_valid_path(p) for p in paths)

    def test_empirical_matches_enumeration_small(self):
        env = gaussian_env(31, LatticeParams(d=1, N=4))
        prof = BetaProfile.constant(1.0, 4)
        table = forward_layers(env, prof)
        paths, probs = gibbs_enumeration(env, prof)
        codes = ((np.diff(paths[:, :, 0], axis=1) == -1) @ (2 ** np.arange(4)))
        lookup = np.full(16, -1)
        lookup[codes] = np.arange(len(paths))
        draws = sample_paths(table, 200_000, np.random.default_rng(6))
        dc = ((np.diff(draws[:, :, 0], axis=1) == -1) @ (2 ** np.arange(4)))
        emp = np.bincount(lookup[dc], minlength=len(paths)) / 200_000
        assert 0.5 * np.abs(emp - probs).sum() < 0.01


class TestEndpointDistribution:
    def test_binomial_at_beta_zero(self):
        env = gaussian_env(1, LatticeParams(d=1, N=2))
        table = forward_layers(env, BetaProfile.constant(0.0, 2))
        dist = endpoint_distribution(table)
        assert dist == {-2: 0.25, 0: 0.5, 2: 0.25}

    def test_normalization(self):
        env = gaussian_env(9, LatticeParams(d=2, N=9))
        table = forward_layers(env, BetaProfile.constant(1.4, 9))
        assert abs(sum(endpoint_distribution(table).values()) - 1.0) < 1e-12

    def test_matches_enumeration_pointwise(self):
        env = gaussian_env(11, LatticeParams(d=1, N=6))
        prof = BetaProfile.constant(2.0, 6)
        dist = endpoint_distribution(forward_layers(env, prof))
        paths, probs = gibbs_enumeration(env, prof)
        ref = {}
        for pth, pr in zip(paths, probs):
            ref[int(pth[-1, 0])] = ref.get(int(pth[-1, 0]), 0.0) + pr
        for x, pr in ref.items():
            assert abs(dist[x] - pr) < 1e-10


class TestMarkovSplitting:
    @pytest.mark.parametrize("d,n", [(1, 8), (2, 6)])
    def test_split_at_every_time(self, d, n):
        rng = np.random.default_rng(d)
        env = gaussian_env(int(rng.integers(0, 2**62)), LatticeParams(d=d, N=n))
        prof = BetaProfile(rng.uniform(0, 2, size=n))
        fwd = forward_layers(env, prof)
        bwd = backward_layers(env, prof)
        lz = log_partition(fwd)
        for i in range(n + 1):
            assert abs(markov_split_logz(fwd, bwd, i) - lz) < 1e-10


def test_brute_force_guard():
    env = gaussian_env(1, LatticeParams(d=2, N=24))
    with pytest.raises(ValueError):
        brute_force_log_partition(env, BetaProfile.constant(1.0, 24))


def test_forward_layers_memory_guard():
    from polymerlab.lattice import Environment, MemoryGuardError

    env = Environment(seed=1, params=LatticeParams(d=2, N=64, max_cells=100))
    with pytest.raises(MemoryGuardError):
        forward_layers(env, BetaProfile.constant(1.0, 64))
