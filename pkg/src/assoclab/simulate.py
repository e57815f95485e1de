"""Path simulation, block decomposition and the deterministic Monte Carlo engine.

Reproducibility contract
------------------------
Replicate ``r`` of a run with master seed ``s`` always draws from the stream
``PCG64(SeedSequence((s, r)))``; that is the entire seed-splitting scheme.
Reduction happens over fixed-size consecutive batches of replicates
(:data:`REDUCTION_BATCH`), combined in ascending batch order, so every result
is a pure function of (estimator, replicates, master_seed) and is bit-identical
no matter how many worker processes execute the batches or how they are
chunked into tasks.

Partial-sum sampling
--------------------
S_n of a finite moving average is a fixed linear combination of n + K
innovations: the K oldest and K newest enter with partial weight sums, the
n - K interior ones all with the full weight sum A. ``draw_partial_sum``
exploits this: the interior block is one draw from the exact law of an iid
innovation sum (normal or centered gamma where closed forms exist), plus 2K
individually weighted edge draws. The law is exactly that of summing a full
path, at O(K) cost per replicate instead of O(nK); tests verify the
distributional identity against brute-force path sums.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, SchemeError
from .models import MAModel, partial_sum_variance

#: Fixed number of replicates per reduction batch. Never derived from the
#: worker count or chunk hint: changing it changes results, changing those
#: does not.
REDUCTION_BATCH = 8192

EstimatorFn = Callable[[int, np.random.Generator], Union[float, np.ndarray]]


# ---------------------------------------------------------------------------
# Block geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockScheme:
    """Partition of 1..n into block_count blocks of block_len plus a remainder.

    block_len = floor(n^(1-alpha)), block_count = floor(n / block_len),
    remainder_len = n - block_count * block_len <= block_len.
    """

    n: int
    alpha: float
    block_len: int
    block_count: int
    remainder_len: int


@dataclass(frozen=True, eq=False)
class BlockSums:
    """Consecutive block sums of one path plus the remainder sum."""

    blocks: np.ndarray
    remainder: float

    @property
    def total(self) -> float:
        return float(np.sum(self.blocks)) + self.remainder


def _floor_power(n: int, exponent: float) -> int:
    """floor(n**exponent) with a snap for values a rounding error below an integer."""
    x = n**exponent
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return int(math.floor(x))


def make_block_scheme(n: int, alpha: float) -> BlockScheme:
    """Build the block geometry for sample length n and block exponent alpha."""
    if n < 1:
        raise SchemeError(f"n must be a positive integer, got {n}")
    if not (0.0 < alpha < 1.0):
        raise SchemeError(f"alpha must lie in (0, 1), got {alpha}")
    p = _floor_power(n, 1.0 - alpha)
    if p >= n / 2.0:
        raise SchemeError(
            f"block length {p} is not below n/2 = {n / 2}; "
            f"choose a larger alpha or a larger n"
        )
    m = n // p
    return BlockScheme(n=n, alpha=alpha, block_len=p, block_count=m, remainder_len=n - m * p)


def block_sums(path, scheme: BlockScheme) -> BlockSums:
    """Exact partition sums of a path under a block scheme.

    The blocks cover entries 1..m*p in consecutive runs of p; the remainder
    collects the trailing n - m*p entries (0.0 when there are none).
    """
    x = np.asarray(path, dtype=float)
    if x.shape != (scheme.n,):
        raise ValueError(f"path length {x.shape} does not match scheme n = {scheme.n}")
    covered = scheme.block_count * scheme.block_len
    offsets = np.arange(0, covered, scheme.block_len)
    blocks = np.add.reduceat(x[:covered], offsets)
    remainder = float(np.sum(x[covered:])) if covered < scheme.n else 0.0
    return BlockSums(blocks=blocks, remainder=remainder)


# ---------------------------------------------------------------------------
# Path and partial-sum sampling
# ---------------------------------------------------------------------------


def path_from_rng(model: MAModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Length-n stationary path: n + K innovations, K of them burn-in."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    z = model.innovation.sample(rng, n + model.order)
    if model.order == 0:
        return model.weights[0] * z
    return np.convolve(z, np.asarray(model.weights), mode="valid")


def sample_path(model: MAModel, n: int, seed: int) -> np.ndarray:
    """Deterministic stationary sample path of length n for a given seed."""
    return path_from_rng(model, n, np.random.default_rng(seed))


@lru_cache(maxsize=4096)
def partial_sum_coefficients(model: MAModel, n: int) -> tuple[int, np.ndarray]:
    """Coefficients of S_n as a linear form in the n + K innovations.

    Returns (bulk_count, edge_weights): bulk_count innovations carry the full
    weight sum each, the rest carry the listed edge weights (oldest first).
    """
    a = np.asarray(model.weights)
    K = model.order
    if K == 0:
        edges = np.empty(0)
        bulk = n
    elif n > K:
        suffix = np.cumsum(a[::-1])[::-1]  # suffix[k] = a_k + ... + a_K
        left = suffix[K - np.arange(K)]  # j = 1-K .. 0
        prefix = np.cumsum(a)  # prefix[i] = a_0 + ... + a_i
        right = prefix[K - 1 - np.arange(K)]  # j = n-K+1 .. n
        edges = np.concatenate([left, right])
        bulk = n - K
    else:
        # short sums: every innovation sees only part of the weight window
        edges = np.array(
            [a[max(0, 1 - j) : min(K, n - j) + 1].sum() for j in range(1 - K, n + 1)]
        )
        bulk = 0
    edges.flags.writeable = False
    return bulk, edges


def draw_partial_sum(model: MAModel, n: int, rng: np.random.Generator, size=None):
    """Draw S_n exactly in law at O(K) cost (see module docstring)."""
    bulk, edges = partial_sum_coefficients(model, n)
    law = model.innovation
    total = model.weight_sum * law.sample_iid_sum(rng, bulk, size=size) if bulk else (
        0.0 if size is None else np.zeros(size)
    )
    if edges.size:
        if size is None:
            total += float(edges @ law.sample(rng, edges.size))
        else:
            total += law.sample(rng, (size, edges.size)) @ edges
    return total


def draw_coupling_block_sums(
    model: MAModel, scheme: BlockScheme, rng: np.random.Generator
) -> np.ndarray:
    """block_count independent draws, each with the exact law of one block sum."""
    m, p = scheme.block_count, scheme.block_len
    bulk, edges = partial_sum_coefficients(model, p)
    law = model.innovation
    sums = (
        model.weight_sum * np.asarray(law.sample_iid_sum(rng, bulk, size=m), dtype=float)
        if bulk
        else np.zeros(m)
    )
    if edges.size:
        sums = sums + law.sample(rng, (m, edges.size)) @ edges
    return sums


def coupling_block_sums(model: MAModel, scheme: BlockScheme, seed: int) -> np.ndarray:
    """Independent coupling blocks: iid copies of the block-sum law.

    Each entry is generated from its own fresh stationary stream, so the
    entries are mutually independent by construction and each has exactly the
    marginal law of a length-p partial sum.
    """
    return draw_coupling_block_sums(model, scheme, np.random.default_rng(seed))


def coupling_sum_stats(model: MAModel, scheme: BlockScheme) -> tuple[float, float]:
    """Exact (variance of one coupling block, variance of their sum)."""
    v = partial_sum_variance(model, scheme.block_len)
    return v, scheme.block_count * v


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCConfig:
    """Replicate budget, master seed and scheduling hints.

    ``threads`` and ``chunk_hint`` only affect how work is scheduled across
    processes; results are a pure function of (estimator, replicates,
    master_seed).
    """

    replicates: int
    master_seed: int
    chunk_hint: Optional[int] = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigError([f"replicates must be >= 1, got {self.replicates}"])
        if not (0 <= self.master_seed < 2**64):
            raise ConfigError([f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}"])
        if self.threads < 1:
            raise ConfigError([f"threads must be >= 1, got {self.threads}"])
        if self.chunk_hint is not None and self.chunk_hint < 1:
            raise ConfigError([f"chunk_hint must be >= 1, got {self.chunk_hint}"])


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo mean with its standard error and provenance."""

    value: float
    stderr: float
    replicates: int
    master_seed: int


def replicate_rng(master_seed: int, r: int) -> np.random.Generator:
    """The stream for replicate r: PCG64 seeded from SeedSequence((master_seed, r))."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, r)))


def substream_seed(master_seed: int, tag: int) -> int:
    """Derive an independent sub-master seed for a named parallel run.

    Experiments that need several mutually independent Monte Carlo runs (for
    example a dependent-path sample and a coupling sample) derive one
    sub-master per run so replicate streams never collide.
    """
    return int(np.random.SeedSequence((master_seed, 0xA55C, tag)).generate_state(1)[0])


def _eval_batch(estimator: EstimatorFn, master_seed: int, lo: int, hi: int, dim: int) -> np.ndarray:
    values = np.empty((hi - lo, dim), dtype=float)
    for i in range(hi - lo):
        r = lo + i
        values[i] = estimator(r, replicate_rng(master_seed, r))
    return values


def _eval_task(args):
    estimator, master_seed, spans, dim, collect = args
    out = []
    for bidx, lo, hi in spans:
        values = _eval_batch(estimator, master_seed, lo, hi, dim)
        partial = (values.sum(axis=0), (values * values).sum(axis=0))
        out.append((bidx, partial, values if collect else None))
    return out


def _probe_dim(estimator: EstimatorFn, master_seed: int) -> int:
    probe = np.atleast_1d(np.asarray(estimator(0, replicate_rng(master_seed, 0)), dtype=float))
    if probe.ndim != 1:
        raise ValueError("estimator must return a scalar or 1-d array")
    return probe.size


def _mc_engine(
    estimator: EstimatorFn, config: MCConfig, collect: bool
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Run all replicates; return (means, stderrs, values-if-collected)."""
    R = config.replicates
    dim = _probe_dim(estimator, config.master_seed)
    batches = [
        (idx, lo, min(lo + REDUCTION_BATCH, R))
        for idx, lo in enumerate(range(0, R, REDUCTION_BATCH))
    ]

    workers = min(config.threads, len(batches))
    if workers <= 1:
        results = _eval_task((estimator, config.master_seed, batches, dim, collect))
    else:
        per_task = config.chunk_hint or max(1, len(batches) // (workers * 4))
        tasks = [
            (estimator, config.master_seed, batches[i : i + per_task], dim, collect)
            for i in range(0, len(batches), per_task)
        ]
        ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
        with ctx.Pool(processes=workers) as pool:
            chunks = pool.map(_eval_task, tasks)
        results = [item for chunk in chunks for item in chunk]

    # combine per-batch partials in ascending batch order: the reduction order
    # is fixed by REDUCTION_BATCH, not by the scheduling above
    results.sort(key=lambda item: item[0])
    total = np.zeros(dim)
    total_sq = np.zeros(dim)
    for _, (s, sq), _ in results:
        total += s
        total_sq += sq
    means = total / R
    if R > 1:
        var = np.maximum(total_sq - R * means * means, 0.0) / (R - 1)
    else:
        var = np.zeros(dim)
    stderrs = np.sqrt(var / R)

    values = None
    if collect:
        values = np.concatenate([v for _, _, v in results], axis=0)
    return means, stderrs, values


def mc_reduce(estimator: EstimatorFn, config: MCConfig) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise Monte Carlo means and standard errors of a vector estimator."""
    means, stderrs, _ = _mc_engine(estimator, config, collect=False)
    return means, stderrs


def mc_collect(estimator: EstimatorFn, config: MCConfig) -> np.ndarray:
    """All replicate values, ordered by replicate index."""
    _, _, values = _mc_engine(estimator, config, collect=True)
    return values


def mc_run(estimator: EstimatorFn, config: MCConfig) -> MonteCarloEstimate:
    """Run a scalar replicate-indexed estimator under the determinism contract."""
    means, stderrs, _ = _mc_engine(estimator, config, collect=False)
    if means.size != 1:
        raise ValueError("mc_run expects a scalar estimator; use mc_reduce for vectors")
    return MonteCarloEstimate(
        value=float(means[0]),
        stderr=float(stderrs[0]),
        replicates=config.replicates,
        master_seed=config.master_seed,
    )
