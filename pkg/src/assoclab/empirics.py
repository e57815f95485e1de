"""End-to-end Monte Carlo experiments: Kolmogorov distances of normalized
partial sums, empirical rate regression, coupling-distance checks,
moderate-deviation ratios and triangular-array moment diagnostics.

All normalizations use the exact partial-sum standard deviation from the
covariance algebra, never an estimated variance. Upper-bound claims are
always tested as non-violation (empirical decay at least as fast as the
bound, within a slope tolerance), since the theory provides bounds with
unspecified constants, not asymptotic equalities. Where a bound's constant
is unknown, the envelope protocol applies: fit the constant at the smallest
n of a grid, then require the bound to hold at every larger n.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from .errors import MomentOrderError, PrecisionError, RegimeWarning
from .models import MAModel, covariance_profile, partial_sum_variance
from .rates import clt_rate_exponent
from .simulate import (
    BlockScheme,
    MCConfig,
    MonteCarloEstimate,
    draw_coupling_block_sums,
    draw_partial_sum,
    mc_collect,
    mc_reduce,
    substream_seed,
)


# ---------------------------------------------------------------------------
# Kolmogorov distances
# ---------------------------------------------------------------------------


def ks_distance(samples) -> float:
    """Exact sup distance between the sample EDF and the standard normal CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("ks_distance needs at least one sample")
    cdf = special.ndtr(x)
    i = np.arange(1, x.size + 1)
    d_plus = float(np.max(i / x.size - cdf))
    d_minus = float(np.max(cdf - (i - 1) / x.size))
    return max(d_plus, d_minus, 0.0)


def two_sample_ks(a, b) -> float:
    """Exact sup distance between two sample EDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("two_sample_ks needs nonempty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_noise_floor(n: int, level: float = 0.99) -> float:
    """Asymptotic level-quantile of the one-sample KS statistic under the null."""
    return float(stats.kstwobign.ppf(level)) / math.sqrt(n)


def two_sample_noise_floor(n1: int, n2: int, level: float = 0.99) -> float:
    """Asymptotic level-quantile of the two-sample KS statistic under equality."""
    return float(stats.kstwobign.ppf(level)) * math.sqrt((n1 + n2) / (n1 * n2))


def permutation_ks_quantile(
    a, b, resamples: int = 200, seed: int = 0, level: float = 0.99
) -> float:
    """Noise floor calibrated by pooled resampling: the level-quantile of the
    two-sample KS statistic when both samples come from one pool."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pool = np.concatenate([a, b])
    rng = np.random.default_rng(seed)
    null = np.empty(resamples)
    for i in range(resamples):
        perm = rng.permutation(pool)
        null[i] = two_sample_ks(perm[: a.size], perm[a.size :])
    return float(np.quantile(null, level))


def envelope_fit_check(shapes, observed, slack=None) -> tuple[float, np.ndarray]:
    """Bound check with an unknown constant: fit it at the first grid point.

    Returns (fitted constant C, boolean array observed <= C*shape + slack).
    The first entry holds by construction; the informative content is the
    claimed dependence on n at the remaining points.
    """
    shapes = np.asarray(shapes, dtype=float)
    observed = np.asarray(observed, dtype=float)
    slack = np.zeros_like(observed) if slack is None else np.asarray(slack, dtype=float)
    constant = observed[0] / shapes[0]
    return float(constant), observed <= constant * shapes + slack


# ---------------------------------------------------------------------------
# Replicate estimators (module level so the parallel engine can pickle them)
# ---------------------------------------------------------------------------


def _normalized_sum(r, rng, model, n, scale):
    return draw_partial_sum(model, n, rng) / scale


def _coupling_total(r, rng, model, scheme, scale):
    return float(draw_coupling_block_sums(model, scheme, rng).sum()) / scale


def _abs_exceeds(r, rng, model, n, threshold):
    return 1.0 if abs(draw_partial_sum(model, n, rng)) > threshold else 0.0


def _exceeds(r, rng, model, n, threshold):
    return 1.0 if draw_partial_sum(model, n, rng) > threshold else 0.0


def _frolov_moments(r, rng, model, block_len, q, thresholds):
    y = draw_partial_sum(model, block_len, rng)
    out = np.empty(1 + len(thresholds))
    out[0] = max(y, 0.0) ** q
    y_sq = y * y
    for i, thr in enumerate(thresholds):
        out[1 + i] = y_sq if y < thr else 0.0
    return out


# ---------------------------------------------------------------------------
# Normal-approximation rate experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RateExperimentResult:
    """Kolmogorov distances of S_n/s_n to the standard normal along a grid of n."""

    n_grid: tuple[int, ...]
    distances: tuple[float, ...]
    fitted_slope: float
    fitted_intercept: float
    replicates: int
    theoretical_exponent: float
    master_seed: int


def _default_q(model: MAModel) -> float:
    q_max = model.innovation.q_max
    if q_max > 3.0:
        return 3.0
    raise MomentOrderError(
        f"innovation law has q_max = {q_max} <= 3; pass an explicit moment order q < {q_max}"
    )


def theoretical_rate_exponent(
    model: MAModel, q: Optional[float] = None, theta: Optional[float] = None
) -> float:
    """Rate exponent implied by the model's effective decay and moment order."""
    if q is None:
        q = _default_q(model)
    else:
        model.innovation.require_moment(q)
    if theta is None:
        theta = covariance_profile(model).theta
    return clt_rate_exponent(q, theta).exponent


def clt_rate_experiment(
    model: MAModel,
    n_grid: Sequence[int],
    mc: MCConfig,
    q: Optional[float] = None,
    theta: Optional[float] = None,
) -> RateExperimentResult:
    """KS distance of S_n/s_n to Phi for each n, with a log-log slope fit.

    Each n runs its own Monte Carlo with an independent substream; the
    normalization s_n is exact. The fitted slope is compared (by callers)
    against -theoretical_exponent as a non-violation check.
    """
    grid = [int(n) for n in n_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 16:
        raise ValueError("n_grid must be increasing with entries >= 16 and length >= 2")
    exponent = theoretical_rate_exponent(model, q, theta)
    distances = []
    for n in grid:
        sub = MCConfig(
            replicates=mc.replicates,
            master_seed=substream_seed(mc.master_seed, n),
            chunk_hint=mc.chunk_hint,
            threads=mc.threads,
        )
        scale = math.sqrt(partial_sum_variance(model, n))
        values = mc_collect(partial(_normalized_sum, model=model, n=n, scale=scale), sub)
        distances.append(ks_distance(values[:, 0]))
    slope, intercept = np.polyfit(np.log(grid), np.log(distances), 1)
    return RateExperimentResult(
        n_grid=tuple(grid),
        distances=tuple(distances),
        fitted_slope=float(slope),
        fitted_intercept=float(intercept),
        replicates=mc.replicates,
        theoretical_exponent=exponent,
        master_seed=mc.master_seed,
    )


# ---------------------------------------------------------------------------
# Coupling distance and remainder tail
# ---------------------------------------------------------------------------


def coupling_distance(model: MAModel, scheme: BlockScheme, mc: MCConfig) -> float:
    """Two-sample KS distance between the dependent block-sum total and the
    independent coupling total, both normalized by the full-sample s_n.

    The dependent total sum_j Y_j equals S_{m*p} exactly, so it is sampled
    through the fast partial-sum path; the coupling total sums block_count
    independent block draws. The two runs use independent substreams.
    """
    scale = math.sqrt(partial_sum_variance(model, scheme.n))
    covered = scheme.block_count * scheme.block_len

    def sub_config(tag: int) -> MCConfig:
        return MCConfig(
            replicates=mc.replicates,
            master_seed=substream_seed(mc.master_seed, tag),
            chunk_hint=mc.chunk_hint,
            threads=mc.threads,
        )

    dependent = mc_collect(
        partial(_normalized_sum, model=model, n=covered, scale=scale), sub_config(0)
    )
    coupled = mc_collect(
        partial(_coupling_total, model=model, scheme=scheme, scale=scale), sub_config(1)
    )
    return two_sample_ks(dependent[:, 0], coupled[:, 0])


def remainder_tail(model: MAModel, scheme: BlockScheme, mc: MCConfig) -> MonteCarloEstimate:
    """P(|remainder block| > n^(-3*alpha/8) * s_n), the discarded-tail event.

    A zero-length remainder gives probability zero exactly, without sampling.
    """
    r_len = scheme.remainder_len
    if r_len == 0:
        return MonteCarloEstimate(0.0, 0.0, mc.replicates, mc.master_seed)
    threshold = scheme.n ** (-3.0 * scheme.alpha / 8.0) * math.sqrt(
        partial_sum_variance(model, scheme.n)
    )
    means, stderrs = mc_reduce(
        partial(_abs_exceeds, model=model, n=r_len, threshold=threshold), mc
    )
    return MonteCarloEstimate(float(means[0]), float(stderrs[0]), mc.replicates, mc.master_seed)


# ---------------------------------------------------------------------------
# Moderate deviations
# ---------------------------------------------------------------------------


def moddev_ratio(model: MAModel, n: int, lam: float, mc: MCConfig) -> MonteCarloEstimate:
    """Estimate P(S_n > x_n s_n) / (1 - Phi(x_n)) at x_n = sqrt(lam * log n).

    The denominator uses the complementary normal CDF directly (erfc-based,
    accurate in the far tail); the standard error is the indicator's Monte
    Carlo error divided by the exact denominator. Levels outside the stated
    regime lam < (q_max - 2)/2 are allowed but flagged with a RegimeWarning,
    to let sharpness probes run. A budget too small to see ~100 exceedances
    raises PrecisionError instead of returning a hollow estimate.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    q_max = model.innovation.q_max
    if math.isfinite(q_max) and lam >= (q_max - 2.0) / 2.0:
        warnings.warn(
            f"lambda = {lam} is outside the moderate-deviation regime "
            f"lambda < (q-2)/2 = {(q_max - 2) / 2} for this innovation law",
            RegimeWarning,
        )
    x = math.sqrt(lam * math.log(n))
    tail = float(special.ndtr(-x))
    expected_hits = mc.replicates * tail
    if expected_hits < 100.0:
        needed = int(math.ceil(100.0 / tail))
        raise PrecisionError(
            f"only {expected_hits:.1f} exceedances expected at R = {mc.replicates}; "
            f"increase replicates to at least {needed}"
        )
    threshold = x * math.sqrt(partial_sum_variance(model, n))
    means, stderrs = mc_reduce(partial(_exceeds, model=model, n=n, threshold=threshold), mc)
    return MonteCarloEstimate(
        value=float(means[0]) / tail,
        stderr=float(stderrs[0]) / tail,
        replicates=mc.replicates,
        master_seed=mc.master_seed,
    )


# ---------------------------------------------------------------------------
# Triangular-array moment diagnostics for the coupling blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrolovDiagnostics:
    """Moment diagnostics of the coupling-block array at one sample size.

    B_n = m * s_p^2 is exact; M_n estimates m * E[(Y^+)^q]; L_n = M_n / B_n^(q/2);
    lambda_fn maps each truncation level delta to the estimated
    (x^4 / B_n) * m * E[Y^2; Y < -delta*sqrt(B_n)/x^5] at x = sqrt(lam*log n);
    e6_value is x^2 - 2*log(1/L_n) - (q-1)*log log(1/L_n) (NaN if L_n >= 1).
    """

    n: int
    alpha: float
    q: float
    lam: float
    B_n: float
    M_n: MonteCarloEstimate
    L_n: float
    lambda_fn: dict[float, MonteCarloEstimate]
    e6_value: float


@dataclass(frozen=True, eq=False)
class FrolovExperimentResult:
    """Per-n diagnostics along a grid plus the aggregated trend quantities."""

    alpha: float
    q: float
    lam: float
    deltas: tuple[float, ...]
    diagnostics: tuple[FrolovDiagnostics, ...]
    log_l_slope: float
    e6_values: tuple[float, ...]


def frolov_diagnostics(
    model: MAModel,
    scheme: BlockScheme,
    q: float,
    lam: float,
    mc: MCConfig,
    deltas: Sequence[float] = (0.5, 1.0),
) -> FrolovDiagnostics:
    """Estimate the independent-array moment conditions for the coupling blocks."""
    if not q > 2:
        raise ValueError(f"moment order q must exceed 2, got {q}")
    model.innovation.require_moment(q)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    m, p = scheme.block_count, scheme.block_len
    B = m * partial_sum_variance(model, p)
    x = math.sqrt(lam * math.log(scheme.n))
    x4, x5 = x**4, x**5
    thresholds = tuple(
        (-delta * math.sqrt(B) / x5) if x5 > 0 else -math.inf for delta in deltas
    )
    means, stderrs = mc_reduce(
        partial(_frolov_moments, model=model, block_len=p, q=q, thresholds=thresholds), mc
    )
    M = MonteCarloEstimate(
        value=m * float(means[0]),
        stderr=m * float(stderrs[0]),
        replicates=mc.replicates,
        master_seed=mc.master_seed,
    )
    L = M.value / B ** (q / 2.0)
    lambda_fn = {}
    for i, delta in enumerate(deltas):
        factor = x4 / B * m
        lambda_fn[float(delta)] = MonteCarloEstimate(
            value=factor * float(means[1 + i]),
            stderr=factor * float(stderrs[1 + i]),
            replicates=mc.replicates,
            master_seed=mc.master_seed,
        )
    if 0.0 < L < 1.0:
        log_inv = math.log(1.0 / L)
        e6 = x * x - 2.0 * log_inv - (q - 1.0) * math.log(log_inv)
    else:
        e6 = math.nan
    return FrolovDiagnostics(
        n=scheme.n, alpha=scheme.alpha, q=q, lam=lam, B_n=B, M_n=M, L_n=L,
        lambda_fn=lambda_fn, e6_value=e6,
    )


def frolov_experiment(
    model: MAModel,
    n_grid: Sequence[int],
    alpha: float,
    q: float,
    lam: float,
    mc: MCConfig,
    deltas: Sequence[float] = (0.5, 1.0),
) -> FrolovExperimentResult:
    """Run the moment diagnostics along a grid of n at fixed block exponent."""
    from .simulate import make_block_scheme

    grid = [int(n) for n in n_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be increasing with at least 2 entries")
    diags = []
    for n in grid:
        sub = MCConfig(
            replicates=mc.replicates,
            master_seed=substream_seed(mc.master_seed, n),
            chunk_hint=mc.chunk_hint,
            threads=mc.threads,
        )
        scheme = make_block_scheme(n, alpha)
        diags.append(frolov_diagnostics(model, scheme, q, lam, sub, deltas))
    log_l = np.log([d.L_n for d in diags])
    slope = float(np.polyfit(np.log(grid), log_l, 1)[0])
    return FrolovExperimentResult(
        alpha=alpha,
        q=q,
        lam=lam,
        deltas=tuple(float(d) for d in deltas),
        diagnostics=tuple(diags),
        log_l_slope=slope,
        e6_values=tuple(d.e6_value for d in diags),
    )
