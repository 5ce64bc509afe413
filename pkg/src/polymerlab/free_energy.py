"""Quenched free-energy estimation, concentration, and multi-temperature checks.

Per-step free energy is estimated as the disorder average of log Z_N / N over
independently seeded environments.  The annealed (Jensen) bound

    E log Z_N(beta) <= log E Z_N(beta) = N beta^2 / 2

is exact because beta^2/2 is the log moment generating function of a standard
normal, so every estimate must sit below beta^2/2 up to sampling noise.
Derivatives use common random numbers: the profiles at beta +/- h share each
environment, which collapses the variance of the difference.

``multi_temp_gap`` measures how closely the multi-temperature free energy
matches the average of independent single-temperature block free energies.
Each replica builds L fresh block environments, evaluates the standalone
block partition functions, and evaluates the multi-temperature partition
function on the concatenation of those same blocks.  Every term keeps its
required marginal law while the shared blocks act as common random numbers,
so the gap statistic isolates the junction-mixing term, which vanishes as
N grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Environment, LatticeParams, PartitionScheme, derive_seed, gaussian_env, make_partition
from .parallel import run_indexed
from .transfer import BetaProfile, log_partitions


@dataclass(frozen=True)
class FreeEnergyEstimate:
    beta: float
    N: int
    d: int
    mean: float  # per-step free energy, (1/N) avg log Z
    stderr: float
    n_disorder: int


@dataclass(frozen=True)
class ConcentrationProfile:
    beta: float
    N: int
    d: int
    u_grid: np.ndarray
    empirical: np.ndarray  # P-hat(|log Z / N - mean| > u)
    bound: np.ndarray  # exp(-N u^2 / (2 beta^2))
    binomial_sigma: np.ndarray
    n_disorder: int

    def within_bound(self, n_sigma: float = 3.0) -> bool:
        return bool(np.all(self.empirical <= self.bound + n_sigma * self.binomial_sigma))


def annealed_bound(beta: float) -> float:
    """Per-step annealed free energy beta^2/2 (Gaussian log-mgf)."""
    return 0.5 * beta * beta


def _per_step_logz(params: LatticeParams, profiles, master_seed: int, n_disorder: int,
                   n_threads: int = 1) -> np.ndarray:
    """(n_disorder, n_profiles) matrix of log Z / N over derived seeds."""
    def one(r: int) -> np.ndarray:
        env = gaussian_env(derive_seed(master_seed, r), params)
        return log_partitions(env, profiles) / params.N

    rows = run_indexed(one, n_disorder, n_threads)
    return np.vstack(rows)


def estimate_free_energy(
    beta: float,
    params: LatticeParams,
    n_disorder: int = 200,
    master_seed: int = 0,
    n_threads: int = 1,
) -> FreeEnergyEstimate:
    """Average (1/N) log Z_N(beta) over independent environments."""
    if n_disorder < 2:
        raise ValueError("need n_disorder >= 2")
    prof = BetaProfile.constant(beta, params.N)
    vals = _per_step_logz(params, [prof], master_seed, n_disorder, n_threads)[:, 0]
    return FreeEnergyEstimate(
        beta=beta,
        N=params.N,
        d=params.d,
        mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / np.sqrt(n_disorder)),
        n_disorder=n_disorder,
    )


def estimate_derivative(
    beta: float,
    h: float,
    params: LatticeParams,
    n_disorder: int = 200,
    master_seed: int = 0,
    n_threads: int = 1,
) -> float:
    """Central difference of the per-step free energy with common random numbers.

    At beta = 0 the derivative is taken one-sided (p'(0) = 0 by the +/- g
    symmetry, and negative temperatures are outside the model).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if beta - h < 0:
        lo, hi, width = 0.0, beta + h, beta + h
    else:
        lo, hi, width = beta - h, beta + h, 2 * h
    profs = [BetaProfile.constant(lo, params.N), BetaProfile.constant(hi, params.N)]
    vals = _per_step_logz(params, profs, master_seed, n_disorder, n_threads)
    return float((vals[:, 1] - vals[:, 0]).mean() / width)


def concentration_profile(
    beta: float,
    params: LatticeParams,
    n_disorder: int,
    u_grid,
    master_seed: int = 0,
    n_threads: int = 1,
) -> ConcentrationProfile:
    """Empirical exceedance of |log Z/N - mean| against the Gaussian bound."""
    u_grid = np.asarray(u_grid, dtype=np.float64)
    if np.any(u_grid <= 0):
        raise ValueError("u grid must be positive")
    prof = BetaProfile.constant(beta, params.N)
    vals = _per_step_logz(params, [prof], master_seed, n_disorder, n_threads)[:, 0]
    dev = np.abs(vals - vals.mean())
    empirical = np.array([(dev > u).mean() for u in u_grid])
    if beta == 0.0:
        bound = np.zeros_like(u_grid)
    else:
        bound = np.exp(-params.N * u_grid**2 / (2.0 * beta * beta))
    sigma = np.sqrt(np.minimum(bound, 1.0) * (1.0 - np.minimum(bound, 1.0)) / n_disorder)
    return ConcentrationProfile(
        beta=beta,
        N=params.N,
        d=params.d,
        u_grid=u_grid,
        empirical=empirical,
        bound=bound,
        binomial_sigma=sigma,
        n_disorder=n_disorder,
    )


# ---------------------------------------------------------------------------
# Multi-temperature consistency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockConcatEnvironment(Environment):
    """Environment assembled from independent block environments.

    Layer i of the composite delegates to the block containing i, with the
    time index shifted so each block environment is queried on 1..block_len.
    The composite field is i.i.d. standard normal because the blocks are
    independent and each is queried injectively.
    """

    blocks: tuple = ()
    boundaries: tuple = ()

    def values(self, i: int, coords: np.ndarray) -> np.ndarray:
        ell = int(np.searchsorted(np.asarray(self.boundaries), i, side="left"))
        return self.blocks[ell - 1].values(i - self.boundaries[ell - 1], coords)


@dataclass(frozen=True)
class GapEstimate:
    """|avg multi-temperature free energy - sum of block free energies|."""

    N: int
    L: int
    betas: tuple
    gap: float
    stderr: float
    lhs_mean: float  # (1/N) avg log Z_{P_{N,L}}(betas)
    rhs_mean: float  # sum_ell (1/N) avg log Z_{block}(beta_ell)
    n_disorder: int


def multi_temp_gap(
    p: PartitionScheme,
    betas,
    d: int,
    n_disorder: int = 200,
    master_seed: int = 0,
    max_cells: int | None = None,
) -> GapEstimate:
    """Gap Delta_N between the two sides of the consistency limit at one N."""
    betas = tuple(float(b) for b in np.atleast_1d(betas))
    if len(betas) != p.L:
        raise ValueError(f"need {p.L} block temperatures, got {len(betas)}")
    if p.N < p.L**2:
        raise ValueError(f"consistency check requires N >= L^2 (N={p.N}, L={p.L})")
    kw = {} if max_cells is None else {"max_cells": max_cells}
    full_params = LatticeParams(d=d, N=p.N, **kw)
    block_params = [LatticeParams(d=d, N=s, **kw) for s in p.sizes]
    block_prof = BetaProfile.from_blocks(p, betas)

    xs = np.empty(n_disorder)
    lhs = np.empty(n_disorder)
    for r in range(n_disorder):
        envs = [
            gaussian_env(derive_seed(master_seed, r * p.L + ell), bp)
            for ell, bp in enumerate(block_params)
        ]
        cat = BlockConcatEnvironment(
            seed=envs[0].seed, params=full_params,
            blocks=tuple(envs), boundaries=p.boundaries,
        )
        lz_full = log_partitions(cat, [block_prof])[0]
        lz_blocks = sum(
            log_partitions(env, [BetaProfile.constant(b, bp.N)])[0]
            for env, bp, b in zip(envs, block_params, betas)
        )
        lhs[r] = lz_full / p.N
        xs[r] = (lz_full - lz_blocks) / p.N

    return GapEstimate(
        N=p.N,
        L=p.L,
        betas=betas,
        gap=float(abs(xs.mean())),
        stderr=float(xs.std(ddof=1) / np.sqrt(n_disorder)) if n_disorder > 1 else 0.0,
        lhs_mean=float(lhs.mean()),
        rhs_mean=float(lhs.mean() - xs.mean()),
        n_disorder=n_disorder,
    )


def multi_temp_consistency(
    n_ladder,
    L: int,
    betas,
    d: int,
    n_disorder: int = 200,
    master_seed: int = 0,
) -> list[GapEstimate]:
    """Gap estimates along an N-ladder (each rung gets fresh seeds)."""
    out = []
    for j, n in enumerate(n_ladder):
        p = make_partition(int(n), L)
        out.append(
            multi_temp_gap(p, betas, d, n_disorder, derive_seed(master_seed, 1_000_003 + j))
        )
    return out


@dataclass(frozen=True)
class LowTempGap:
    beta: float
    N: int
    d: int
    gap: float  # beta^2/2 - estimated per-step free energy
    stderr: float
    estimate: FreeEnergyEstimate


def low_temp_gap(
    beta: float,
    params: LatticeParams,
    n_disorder: int = 200,
    master_seed: int = 0,
    n_threads: int = 1,
) -> LowTempGap:
    """Annealed-minus-quenched gap; a gap >> stderr evidences low temperature."""
    est = estimate_free_energy(beta, params, n_disorder, master_seed, n_threads)
    return LowTempGap(
        beta=beta, N=params.N, d=params.d,
        gap=annealed_bound(beta) - est.mean, stderr=est.stderr, estimate=est,
    )
