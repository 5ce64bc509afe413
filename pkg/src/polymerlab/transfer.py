"""Exact partition functions and exact Gibbs path sampling.

A forward transfer-matrix recursion computes, entirely in log-space,

    W(0, origin) = 1,
    W(i, x) = exp(beta_i * g(i, x)) * (1/2d) * sum_{y ~ x} W(i-1, y),

so that log Z = logsumexp_x log W(N, x).  A matching backward recursion gives
the conditional partition function from (i, x) onward; combining the two
yields exact site marginals and a Markov split of log Z at any time.  Paths
are sampled exactly (not approximately) by drawing the endpoint proportional
to W(N, .) and walking backwards.

Three layer representations are used:
  d=1   dense array per layer, site x = -i + 2j at index j;
  d=2   dense (i+1) x (i+1) grid in rotated coordinates s = x1+x2,
        t = x1-x2, where the walk factorizes into two independent
        one-dimensional walks and the reachable cone becomes a full square;
  d>=3  coordinate lists keyed by packed integers, joined via searchsorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Environment, MemoryGuardError, PartitionScheme, reachable_cells_total

NEG_INF = -np.inf


def logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    """Max-shifted logsumexp that preserves the input dtype (incl. longdouble)."""
    a = np.asarray(a)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out.reshape(()) if axis is None else np.squeeze(out, axis=axis)


# ---------------------------------------------------------------------------
# Per-step inverse-temperature profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaProfile:
    """Inverse temperature per step i = 1..N (entry i-1 applies to g(i, .))."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)  # own copy; frozen below
        if v.ndim != 1 or v.size < 1:
            raise ValueError("profile must be a non-empty 1-d array")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("profile entries must be finite and >= 0")
        object.__setattr__(self, "values", v)
        self.values.setflags(write=False)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    @classmethod
    def constant(cls, beta: float, N: int) -> "BetaProfile":
        return cls(np.full(N, float(beta)))

    @classmethod
    def from_blocks(cls, p: PartitionScheme, betas) -> "BetaProfile":
        """Block profile of the multi-temperature Hamiltonian."""
        betas = np.asarray(betas, dtype=np.float64)
        if betas.shape != (p.L,):
            raise ValueError(f"need one beta per block, got {betas.shape} for L={p.L}")
        out = np.empty(p.N)
        for ell in range(1, p.L + 1):
            lo, hi = p.block_window(ell)
            out[lo - 1 : hi] = betas[ell - 1]
        return cls(out)

    @classmethod
    def excluding_block(cls, p: PartitionScheme, ell: int, beta: float) -> "BetaProfile":
        """Constant beta with the disorder of block ell suppressed."""
        out = np.full(p.N, float(beta))
        lo, hi = p.block_window(ell)
        out[lo - 1 : hi] = 0.0
        return cls(out)


# ---------------------------------------------------------------------------
# Layer tables
# ---------------------------------------------------------------------------

def _kind_for(d: int) -> str:
    return "line" if d == 1 else "grid" if d == 2 else "general"


def _offsets(d: int) -> np.ndarray:
    out = np.zeros((2 * d, d), dtype=np.int64)
    for k in range(d):
        out[2 * k, k] = 1
        out[2 * k + 1, k] = -1
    return out


def _pack_keys(coords: np.ndarray, N: int) -> np.ndarray:
    base = 2 * N + 1
    if coords.shape[1] * math.log2(base) > 62:
        raise MemoryGuardError("packed site keys would overflow int64")
    key = np.zeros(coords.shape[0], dtype=np.int64)
    for k in range(coords.shape[1]):
        key = key * base + (coords[:, k] + N)
    return key


@dataclass
class LayerTable:
    """All layers of one forward or backward pass, in log-space.

    Layer payloads follow the kernel-native representation documented in the
    module docstring; ``layer_logw``/``layer_coords`` give a flat view.
    """

    env: Environment
    profile: BetaProfile
    direction: str  # "forward" | "backward"
    kind: str
    layers: list = field(repr=False)
    coords: list | None = field(default=None, repr=False)  # general kind only

    @property
    def d(self) -> int:
        return self.env.params.d

    @property
    def N(self) -> int:
        return self.profile.N

    def layer_logw(self, i: int) -> np.ndarray:
        w = self.layers[i]
        return w.ravel() if self.kind == "grid" else w

    def layer_coords(self, i: int) -> np.ndarray:
        if self.kind == "line":
            return np.arange(-i, i + 1, 2, dtype=np.int64)[:, None]
        if self.kind == "grid":
            a = np.arange(i + 1)
            s = (-i + 2 * a)[:, None] + np.zeros(i + 1, dtype=np.int64)[None, :]
            t = np.zeros(i + 1, dtype=np.int64)[:, None] + (-i + 2 * a)[None, :]
            x1, x2 = (s + t) // 2, (s - t) // 2
            return np.stack([x1.ravel(), x2.ravel()], axis=1)
        return self.coords[i]


def _line_forward_step(prev, g, beta, dtype):
    pad = np.full(1, NEG_INF, dtype=dtype)
    nb = np.logaddexp(np.concatenate((pad, prev)), np.concatenate((prev, pad)))
    drive = beta * g if beta != 0.0 else 0.0
    return drive + nb - np.log(dtype(2.0))


def _line_backward_step(nxt, g, beta, dtype):
    c = (beta * g if beta != 0.0 else 0.0) + nxt
    return np.logaddexp(c[:-1], c[1:]) - np.log(dtype(2.0))


def _grid_forward_step(prev, g, beta, dtype):
    i = prev.shape[0]  # prev covers layer i-1 with i cells per axis
    pp = np.full((i + 2, i + 2), NEG_INF, dtype=dtype)
    pp[1 : i + 1, 1 : i + 1] = prev
    nb = np.logaddexp(
        np.logaddexp(pp[: i + 1, : i + 1], pp[: i + 1, 1:]),
        np.logaddexp(pp[1:, : i + 1], pp[1:, 1:]),
    )
    drive = beta * g if beta != 0.0 else 0.0
    return drive + nb - np.log(dtype(4.0))


def _grid_backward_step(nxt, g, beta, dtype):
    c = (beta * g if beta != 0.0 else 0.0) + nxt
    return (
        np.logaddexp(
            np.logaddexp(c[:-1, :-1], c[:-1, 1:]),
            np.logaddexp(c[1:, :-1], c[1:, 1:]),
        )
        - np.log(dtype(4.0))
    )


def _grid_layer_coords(i: int) -> np.ndarray:
    a = -i + 2 * np.arange(i + 1, dtype=np.int64)
    s, t = np.meshgrid(a, a, indexing="ij")
    return np.stack([((s + t) // 2).ravel(), ((s - t) // 2).ravel()], axis=1)


def _general_expand(coords, keys, N, d):
    """Coords/keys of the next layer from the current one."""
    cand = (coords[None, :, :] + _offsets(d)[:, None, :]).reshape(-1, d)
    ck = _pack_keys(cand, N)
    uk, idx = np.unique(ck, return_index=True)
    return cand[idx], uk


def _general_gather(src_keys, src_vals, dst_keys, dtype):
    pos = np.searchsorted(src_keys, dst_keys)
    pos_c = np.clip(pos, 0, len(src_keys) - 1)
    hit = src_keys[pos_c] == dst_keys
    out = np.full(len(dst_keys), NEG_INF, dtype=dtype)
    out[hit] = src_vals[pos_c[hit]]
    return out


def _check_guard(env: Environment):
    p = env.params
    total = reachable_cells_total(p.N, p.d, cap=p.max_cells)
    if total > p.max_cells:
        raise MemoryGuardError(
            f"layer table for d={p.d}, N={p.N} exceeds {p.max_cells} cells"
        )


def _layer_g(env, i, kind, coords_i, dtype):
    if kind == "line":
        g = env.values(i, np.arange(-i, i + 1, 2, dtype=np.int64)[:, None])
    elif kind == "grid":
        g = env.values(i, _grid_layer_coords(i)).reshape(i + 1, i + 1)
    else:
        g = env.values(i, coords_i)
    return g.astype(dtype, copy=False) if dtype is not np.float64 else g


def forward_layers(env: Environment, profile: BetaProfile, dtype=np.float64) -> LayerTable:
    """Run the full forward recursion and keep every layer."""
    _check_forward_args(env, profile)
    _check_guard(env)
    d, N, kind = env.params.d, profile.N, _kind_for(env.params.d)
    beta = profile.values

    if kind == "line":
        layers = [np.zeros(1, dtype=dtype)]
        for i in range(1, N + 1):
            g = _layer_g(env, i, kind, None, dtype)
            layers.append(_line_forward_step(layers[-1], g, beta[i - 1], dtype))
        return LayerTable(env, profile, "forward", kind, layers)

    if kind == "grid":
        layers = [np.zeros((1, 1), dtype=dtype)]
        for i in range(1, N + 1):
            g = _layer_g(env, i, kind, None, dtype)
            layers.append(_grid_forward_step(layers[-1], g, beta[i - 1], dtype))
        return LayerTable(env, profile, "forward", kind, layers)

    coords = [np.zeros((1, d), dtype=np.int64)]
    keys = [_pack_keys(coords[0], N)]
    layers = [np.zeros(1, dtype=dtype)]
    offs = _offsets(d)
    for i in range(1, N + 1):
        ci, ki = _general_expand(coords[-1], keys[-1], N, d)
        acc = np.full(len(ki), NEG_INF, dtype=dtype)
        for o in offs:
            src = _pack_keys(ci - o, N)
            acc = np.logaddexp(acc, _general_gather(keys[-1], layers[-1], src, dtype))
        g = _layer_g(env, i, kind, ci, dtype)
        drive = beta[i - 1] * g if beta[i - 1] != 0.0 else 0.0
        layers.append(drive + acc - np.log(dtype(2.0 * d)))
        coords.append(ci)
        keys.append(ki)
    table = LayerTable(env, profile, "forward", kind, layers, coords=coords)
    table._keys = keys  # reused by the sampler and backward pass
    return table


def backward_layers(env: Environment, profile: BetaProfile, dtype=np.float64) -> LayerTable:
    """Conditional partition functions B(i, x) from (i, x) onward, log-space."""
    _check_forward_args(env, profile)
    _check_guard(env)
    d, N, kind = env.params.d, profile.N, _kind_for(env.params.d)
    beta = profile.values

    if kind == "line":
        layers = [None] * (N + 1)
        layers[N] = np.zeros(N + 1, dtype=dtype)
        for i in range(N, 0, -1):
            g = _layer_g(env, i, kind, None, dtype)
            layers[i - 1] = _line_backward_step(layers[i], g, beta[i - 1], dtype)
        return LayerTable(env, profile, "backward", kind, layers)

    if kind == "grid":
        layers = [None] * (N + 1)
        layers[N] = np.zeros((N + 1, N + 1), dtype=dtype)
        for i in range(N, 0, -1):
            g = _layer_g(env, i, kind, None, dtype)
            layers[i - 1] = _grid_backward_step(layers[i], g, beta[i - 1], dtype)
        return LayerTable(env, profile, "backward", kind, layers)

    coords = [np.zeros((1, d), dtype=np.int64)]
    keys = [_pack_keys(coords[0], N)]
    for i in range(1, N + 1):
        ci, ki = _general_expand(coords[-1], keys[-1], N, d)
        coords.append(ci)
        keys.append(ki)
    layers = [None] * (N + 1)
    layers[N] = np.zeros(len(keys[N]), dtype=dtype)
    offs = _offsets(d)
    for i in range(N, 0, -1):
        g = _layer_g(env, i, kind, coords[i], dtype)
        c = (beta[i - 1] * g if beta[i - 1] != 0.0 else 0.0) + layers[i]
        acc = np.full(len(keys[i - 1]), NEG_INF, dtype=dtype)
        for o in offs:
            src = _pack_keys(coords[i - 1] + o, N)
            acc = np.logaddexp(acc, _general_gather(keys[i], c, src, dtype))
        layers[i - 1] = acc - np.log(dtype(2.0 * d))
    table = LayerTable(env, profile, "backward", kind, layers, coords=coords)
    table._keys = keys
    return table


def _check_forward_args(env: Environment, profile: BetaProfile):
    if profile.N != env.params.N:
        raise ValueError(
            f"profile length {profile.N} does not match environment N={env.params.N}"
        )


# ---------------------------------------------------------------------------
# Partition functions
# ---------------------------------------------------------------------------

def log_partition(table: LayerTable) -> float:
    """logsumexp over the final layer (forward) or the root cell (backward).

    An identically-zero profile short-circuits to exactly 0.0: the Gibbs
    weight is then 1 for every path regardless of the disorder.
    """
    if table.profile.is_zero:
        return 0.0
    if table.direction == "forward":
        return float(logsumexp(table.layer_logw(table.N)))
    return float(table.layer_logw(0)[0])


def log_partitions(env: Environment, profiles, dtype=np.float64) -> np.ndarray:
    """log Z for several profiles over one environment, sharing the field.

    Rolling two layers only; the per-layer disorder is generated once and fed
    to every profile, which is what makes common-random-number derivative and
    multi-temperature estimates cheap.
    """
    profiles = list(profiles)
    for pr in profiles:
        _check_forward_args(env, pr)
    _check_guard(env)
    d, N, kind = env.params.d, profiles[0].N, _kind_for(env.params.d)
    betas = [pr.values for pr in profiles]

    if kind == "line":
        cur = [np.zeros(1, dtype=dtype) for _ in profiles]
        for i in range(1, N + 1):
            g = _layer_g(env, i, kind, None, dtype)
            cur = [_line_forward_step(c, g, b[i - 1], dtype) for c, b in zip(cur, betas)]
        out = [logsumexp(c) for c in cur]
    elif kind == "grid":
        cur = [np.zeros((1, 1), dtype=dtype) for _ in profiles]
        for i in range(1, N + 1):
            g = _layer_g(env, i, kind, None, dtype)
            cur = [_grid_forward_step(c, g, b[i - 1], dtype) for c, b in zip(cur, betas)]
        out = [logsumexp(c) for c in cur]
    else:
        coords = np.zeros((1, d), dtype=np.int64)
        keys = _pack_keys(coords, N)
        cur = [np.zeros(1, dtype=dtype) for _ in profiles]
        offs = _offsets(d)
        for i in range(1, N + 1):
            ci, ki = _general_expand(coords, keys, N, d)
            g = _layer_g(env, i, kind, ci, dtype)
            nxt = []
            for c, b in zip(cur, betas):
                acc = np.full(len(ki), NEG_INF, dtype=dtype)
                for o in offs:
                    src = _pack_keys(ci - o, N)
                    acc = np.logaddexp(acc, _general_gather(keys, c, src, dtype))
                drive = b[i - 1] * g if b[i - 1] != 0.0 else 0.0
                nxt.append(drive + acc - np.log(dtype(2.0 * d)))
            cur, coords, keys = nxt, ci, ki
        out = [logsumexp(c) for c in cur]

    return np.array(
        [0.0 if pr.is_zero else float(v) for pr, v in zip(profiles, out)]
    )


def log_partition_multi(env: Environment, p: PartitionScheme, betas) -> float:
    """Multi-temperature log Z for per-block inverse temperatures."""
    return float(log_partitions(env, [BetaProfile.from_blocks(p, betas)])[0])


def log_partition_excluding_block(
    env: Environment, p: PartitionScheme, ell: int, beta: float
) -> float:
    """log Z with the disorder of block ell suppressed and beta elsewhere."""
    return float(log_partitions(env, [BetaProfile.excluding_block(p, ell, beta)])[0])


# ---------------------------------------------------------------------------
# Exact sampling and marginals
# ---------------------------------------------------------------------------

def _categorical_rows(logits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row from unnormalized log-weights."""
    m = logits.max(axis=1, keepdims=True)
    w = np.exp(logits - m)
    c = np.cumsum(w, axis=1)
    r = rng.random((logits.shape[0], 1)) * c[:, -1:]
    return (r > c).sum(axis=1)


def sample_paths(table: LayerTable, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n independent paths exactly from the Gibbs measure of the table.

    Endpoint first, proportional to W(N, .), then each earlier site among
    the neighbors proportional to W(i-1, .).  Returns (n, N+1, d) int64.
    """
    if table.direction != "forward":
        raise ValueError("sampling requires a forward table")
    N, d, kind = table.N, table.d, table.kind
    out = np.zeros((n, N + 1, d), dtype=np.int64)

    if kind == "line":
        w = table.layers[N]
        j = _categorical_rows(np.broadcast_to(w, (n, w.size)), rng)
        out[:, N, 0] = -N + 2 * j
        for i in range(N, 0, -1):
            prev = table.layers[i - 1]  # length i
            left = np.where(j >= 1, prev[np.clip(j - 1, 0, i - 1)], NEG_INF)
            right = np.where(j <= i - 1, prev[np.clip(j, 0, i - 1)], NEG_INF)
            pick = _categorical_rows(np.stack([left, right], axis=1), rng)
            j = j - 1 + pick
            out[:, i - 1, 0] = -(i - 1) + 2 * j
        return out

    if kind == "grid":
        w = table.layers[N].ravel()
        flat = _categorical_rows(np.broadcast_to(w, (n, w.size)), rng)
        a, b = flat // (N + 1), flat % (N + 1)
        s, t = -N + 2 * a, -N + 2 * b
        out[:, N, 0], out[:, N, 1] = (s + t) // 2, (s - t) // 2
        for i in range(N, 0, -1):
            prev = table.layers[i - 1]  # (i, i)
            cand = np.full((n, 4), NEG_INF)
            for c, (da, db) in enumerate(((-1, -1), (-1, 0), (0, -1), (0, 0))):
                aa, bb = a + da, b + db
                ok = (aa >= 0) & (aa <= i - 1) & (bb >= 0) & (bb <= i - 1)
                cand[ok, c] = prev[aa[ok], bb[ok]]
            pick = _categorical_rows(cand, rng)
            a = a + np.where(pick < 2, -1, 0)
            b = b + np.where(pick % 2 == 0, -1, 0)
            s, t = -(i - 1) + 2 * a, -(i - 1) + 2 * b
            out[:, i - 1, 0], out[:, i - 1, 1] = (s + t) // 2, (s - t) // 2
        return out

    keys = table._keys
    w = table.layers[N]
    idx = _categorical_rows(np.broadcast_to(w, (n, w.size)), rng)
    pos = table.coords[N][idx]
    out[:, N] = pos
    offs = _offsets(d)
    for i in range(N, 0, -1):
        cand = np.full((n, 2 * d), NEG_INF)
        nbr = pos[:, None, :] - offs[None, :, :]  # predecessors
        for c in range(2 * d):
            ck = _pack_keys(nbr[:, c, :], table.N)
            cand[:, c] = _general_gather(keys[i - 1], table.layers[i - 1], ck, np.float64)
        pick = _categorical_rows(cand, rng)
        pos = nbr[np.arange(n), pick]
        out[:, i - 1] = pos
    return out


def sample_path(table: LayerTable, rng: np.random.Generator) -> np.ndarray:
    """Single exact Gibbs draw, shape (N+1, d)."""
    return sample_paths(table, 1, rng)[0]


def endpoint_distribution(table: LayerTable) -> dict:
    """Map x in D_N to mu(sigma_N = x); values sum to 1 (within 1e-12)."""
    if table.direction != "forward":
        raise ValueError("endpoint distribution requires a forward table")
    w = table.layer_logw(table.N)
    probs = np.exp(w - logsumexp(w))
    coords = table.layer_coords(table.N)
    if table.d == 1:
        return {int(c[0]): float(p) for c, p in zip(coords, probs)}
    return {tuple(int(v) for v in c): float(p) for c, p in zip(coords, probs)}


def layer_log_marginals(fwd: LayerTable, bwd: LayerTable, i: int) -> np.ndarray:
    """log mu(sigma_i = x) over layer i, flat, normalized within the layer."""
    s = fwd.layer_logw(i) + bwd.layer_logw(i)
    return s - logsumexp(s)


def markov_split_logz(fwd: LayerTable, bwd: LayerTable, i: int) -> float:
    """log Z reassembled at split time i: logsumexp_x [log A + log B]."""
    return float(logsumexp(fwd.layer_logw(i) + bwd.layer_logw(i)))


# ---------------------------------------------------------------------------
# Enumeration oracles
# ---------------------------------------------------------------------------

BRUTE_FORCE_CAP = 10_000_000


def _digit_positions(digits: np.ndarray, d: int) -> np.ndarray:
    """(M, N) step digits in base 2d -> (M, N+1, d) lattice positions."""
    steps = _offsets(d)[digits]  # (M, N, d)
    pos = np.zeros((digits.shape[0], digits.shape[1] + 1, d), dtype=np.int64)
    pos[:, 1:] = np.cumsum(steps, axis=1)
    return pos


def enumerate_paths(N: int, d: int) -> np.ndarray:
    """All (2d)^N nearest-neighbor paths from the origin, (M, N+1, d)."""
    M = (2 * d) ** N
    if M > 2_000_000:
        raise ValueError(f"(2d)^N = {M} too large to materialize")
    idx = np.arange(M)
    digits = (idx[:, None] // (2 * d) ** np.arange(N)[None, :]) % (2 * d)
    return _digit_positions(digits.astype(np.int64), d)


def _path_log_weights(env: Environment, profile: BetaProfile, paths: np.ndarray) -> np.ndarray:
    """Unnormalized log Gibbs weight beta.H - N log 2d per enumerated path."""
    N, d = profile.N, env.params.d
    h = np.zeros(paths.shape[0])
    for i in range(1, N + 1):
        b = profile.values[i - 1]
        if b != 0.0:
            h += b * env.values(i, paths[:, i, :])
    return h - N * math.log(2 * d)


def brute_force_log_partition(env: Environment, profile: BetaProfile) -> float:
    """Reference log Z by direct enumeration of every path."""
    _check_forward_args(env, profile)
    N, d = profile.N, env.params.d
    M = (2 * d) ** N
    if M > BRUTE_FORCE_CAP:
        raise ValueError(f"(2d)^N = {M} exceeds the enumeration cap {BRUTE_FORCE_CAP}")
    chunk = 1 << 18
    pows = (2 * d) ** np.arange(N)[None, :]
    parts = []
    for lo in range(0, M, chunk):
        idx = np.arange(lo, min(lo + chunk, M))
        digits = ((idx[:, None] // pows) % (2 * d)).astype(np.int64)
        parts.append(logsumexp(_path_log_weights(env, profile, _digit_positions(digits, d))))
    return float(logsumexp(np.array(parts)))


def gibbs_enumeration(env: Environment, profile: BetaProfile):
    """(paths, probabilities) of the exact Gibbs law, by enumeration."""
    paths = enumerate_paths(profile.N, env.params.d)
    logw = _path_log_weights(env, profile, paths)
    return paths, np.exp(logw - logsumexp(logw))
