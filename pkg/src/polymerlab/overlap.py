"""Overlap functionals and replica-overlap estimators under the Gibbs measure.

The overlap of two equal-length paths counts coinciding sites over i = 1..N
(the shared origin is excluded).  Replica estimates come from exact Gibbs
sampling; the exact quenched two-replica overlap comes from forward/backward
marginals,

    <R> = (1/N) sum_i sum_x mu(sigma_i = x)^2,

which also powers the finite-N derivative identity

    (1/N) d/dbeta E log Z_N(beta) = beta * (1 - E<R>_beta),

obtained from Gaussian integration by parts.  ``ibp_residual`` checks that
identity: in Monte Carlo mode both sides are disorder averages over a common
set of environments; in enumeration mode the statistically-exact pathwise
half of the identity, d/dbeta log Z = <H>, is checked per environment with
log Z from path enumeration and <H> from transfer-matrix marginals, so only
the O(h^2) finite-difference bias remains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Environment, LatticeParams, PartitionScheme, derive_seed, gaussian_env
from .transfer import (
    BetaProfile,
    backward_layers,
    brute_force_log_partition,
    forward_layers,
    gibbs_enumeration,
    layer_log_marginals,
    log_partitions,
    logsumexp,
    sample_paths,
)


def _coerce(a) -> np.ndarray:
    a = np.asarray(a)
    return a[:, None] if a.ndim == 1 else a


def overlap_count(a, b, lo: int, hi: int) -> int:
    """Number of coinciding sites on the closed window [lo, hi]."""
    a, b = _coerce(a), _coerce(b)
    return int(np.all(a[lo : hi + 1] == b[lo : hi + 1], axis=1).sum())


def overlap(a, b) -> float:
    """Fraction of coinciding sites over i = 1..N."""
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ValueError(f"path shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[0] - 1
    if n < 1:
        raise ValueError("paths must have at least one step")
    return overlap_count(a, b, 1, n) / n


def restricted_overlap(a, b, lo: int, hi: int) -> float:
    """Fraction of coinciding sites on [lo, hi], 1 <= lo <= hi <= N."""
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ValueError(f"path shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[0] - 1
    if not 1 <= lo <= hi <= n:
        raise ValueError(f"window [{lo}, {hi}] not inside [1, {n}]")
    return overlap_count(a, b, lo, hi) / (hi - lo + 1)


def block_overlap(a, b, p: PartitionScheme, ell: int) -> float:
    """Restricted overlap on the ell-th regular block of the partition."""
    lo, hi = p.block_window(ell)
    if lo > hi:
        raise ValueError(f"block {ell} of partition is empty")
    return restricted_overlap(a, b, lo, hi)


@dataclass(frozen=True)
class OverlapEstimate:
    mean: float
    stderr: float
    n_pairs: int
    n_disorder: int


def mean_replica_overlap(
    env: Environment,
    profile: BetaProfile,
    n_pairs: int,
    rng: np.random.Generator,
    sampler=sample_paths,
) -> OverlapEstimate:
    """Quenched <R> estimate from disjoint pairs of independent Gibbs draws.

    ``sampler`` is injectable so tests can force degenerate draws.
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    table = forward_layers(env, profile)
    paths = sampler(table, 2 * n_pairs, rng)
    n = profile.N
    eq = np.all(paths[0::2, 1:, :] == paths[1::2, 1:, :], axis=2)
    vals = eq.sum(axis=1) / n
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_pairs)) if n_pairs > 1 else 0.0
    return OverlapEstimate(mean=mean, stderr=stderr, n_pairs=n_pairs, n_disorder=1)


def exact_two_replica_overlap(env: Environment, profile: BetaProfile) -> float:
    """Exact quenched <R> = (1/N) sum_i sum_x mu(sigma_i = x)^2."""
    fwd = forward_layers(env, profile)
    bwd = backward_layers(env, profile)
    n = profile.N
    total = 0.0
    for i in range(1, n + 1):
        lm = layer_log_marginals(fwd, bwd, i)
        total += float(np.exp(logsumexp(2.0 * lm)))
    return total / n


def _mean_energy_from_marginals(env: Environment, profile: BetaProfile) -> float:
    """<H> = sum_{i,x} g(i,x) mu(sigma_i = x) via transfer-matrix marginals."""
    fwd = forward_layers(env, profile)
    bwd = backward_layers(env, profile)
    total = 0.0
    for i in range(1, profile.N + 1):
        mu = np.exp(layer_log_marginals(fwd, bwd, i))
        g = env.values(i, fwd.layer_coords(i))
        total += float(mu @ g)
    return total


@dataclass(frozen=True)
class IbpEstimate:
    """Residual of the finite-N derivative identity, with its noise scale."""

    residual: float
    stderr: float
    derivative: float  # centered finite difference of per-step free energy
    overlap_term: float  # beta * (1 - E<R>) in mc mode; <H>/N in enum mode
    beta: float
    h: float
    n_disorder: int
    mode: str


def ibp_residual(
    beta: float,
    h: float,
    params: LatticeParams,
    n_disorder: int,
    master_seed: int,
    mode: str = "mc",
) -> IbpEstimate:
    """Check (1/N) d/dbeta E log Z = beta (1 - E<R>) at finite N.

    mc:   averages both sides over ``n_disorder`` common environments; the
          residual is zero-mean up to O(h^2) with Monte Carlo noise reported
          as ``stderr``.
    enum: checks the pathwise half d/dbeta log Z = <H> per environment, with
          log Z from full path enumeration and <H> from transfer-matrix
          marginals; all sampling noise cancels and only the O(h^2)
          discretization bias remains.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if beta - h < 0:
        raise ValueError("need beta - h >= 0")
    if mode not in ("mc", "enum"):
        raise ValueError(f"unknown mode {mode!r}")
    n = params.N
    prof_p = BetaProfile.constant(beta + h, n)
    prof_m = BetaProfile.constant(beta - h, n)
    prof_0 = BetaProfile.constant(beta, n)

    diffs = np.empty(n_disorder)
    rhs = np.empty(n_disorder)
    for r in range(n_disorder):
        env = gaussian_env(derive_seed(master_seed, r), params)
        if mode == "mc":
            lzp, lzm = log_partitions(env, [prof_p, prof_m])
            diffs[r] = (lzp - lzm) / (2.0 * h * n)
            rhs[r] = beta * (1.0 - exact_two_replica_overlap(env, prof_0))
        else:
            lzp = brute_force_log_partition(env, prof_p)
            lzm = brute_force_log_partition(env, prof_m)
            diffs[r] = (lzp - lzm) / (2.0 * h * n)
            rhs[r] = _mean_energy_from_marginals(env, prof_0) / n

    x = diffs - rhs
    residual = float(abs(x.mean()))
    stderr = float(x.std(ddof=1) / np.sqrt(n_disorder)) if n_disorder > 1 else 0.0
    return IbpEstimate(
        residual=residual,
        stderr=stderr,
        derivative=float(diffs.mean()),
        overlap_term=float(rhs.mean()),
        beta=beta,
        h=h,
        n_disorder=n_disorder,
        mode=mode,
    )


def enumerated_two_replica_overlap(env: Environment, profile: BetaProfile) -> float:
    """<R> by the full double sum over enumerated paths (test oracle)."""
    paths, probs = gibbs_enumeration(env, profile)
    n = profile.N
    eq = np.all(paths[:, None, 1:, :] == paths[None, :, 1:, :], axis=3)
    r = eq.sum(axis=2) / n
    return float(probs @ r @ probs)
