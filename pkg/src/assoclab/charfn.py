"""Characteristic-function machinery: empirical CFs, the positive-dependence
joint-vs-product inequality, block-covariance identities, and the smoothing
bound on Kolmogorov distance.

The smoothing bound implemented by :func:`esseen_distance_bound` is

    sup_x |F(x) - Phi(x)| <= (1/pi) * int_{-T}^{T} |f(t) - phi(t)| / |t| dt
                             + (24 / (pi*sqrt(2*pi))) / T,

with f the empirical characteristic function of the samples and phi the
standard normal CF. The two constants are the classical smoothing-inequality
choices (1/pi for the integral; the tail constant uses sup Phi' = 1/sqrt(2*pi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureError
from .models import MAModel, autocovariances, partial_sum_variance
from .simulate import (
    BlockScheme,
    MCConfig,
    MonteCarloEstimate,
    block_sums,
    draw_partial_sum,
    mc_collect,
    mc_reduce,
    path_from_rng,
)

INTEGRAL_CONSTANT = 1.0 / math.pi
TAIL_CONSTANT = 24.0 / (math.pi * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class CFEstimate:
    """Empirical characteristic function value at one frequency.

    ``stderr`` combines the componentwise Monte Carlo errors of the real and
    imaginary parts (root sum of squares).
    """

    t: float
    value: complex
    stderr: float


@dataclass(frozen=True)
class SmoothingParameters:
    """Truncation frequency and constants of the smoothing inequality."""

    T: float
    integral_constant: float = INTEGRAL_CONSTANT
    tail_constant: float = TAIL_CONSTANT

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"truncation frequency T must be positive, got {self.T}")


def truncation_frequency(n: int, alpha: float, b: float = -0.1) -> float:
    """The slowly-damped truncation frequency (log n)^b * n^(alpha/2), b < 0."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if not b < 0:
        raise ValueError(f"b must be negative, got {b}")
    return math.log(n) ** b * n ** (alpha / 2.0)


def empirical_cf(samples, t: float) -> CFEstimate:
    """Empirical CF (1/R) * sum exp(i t x_r) with componentwise standard errors."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    tx = t * x
    re, im = np.cos(tx), np.sin(tx)
    value = complex(re.mean(), im.mean())
    if x.size > 1:
        se = math.hypot(re.std(ddof=1), im.std(ddof=1)) / math.sqrt(x.size)
    else:
        se = 0.0
    return CFEstimate(t=t, value=value, stderr=se)


# ---------------------------------------------------------------------------
# Exact block covariances
# ---------------------------------------------------------------------------


def block_covariance(model: MAModel, scheme: BlockScheme, j: int, k: int) -> float:
    """Exact Cov(Y_j, Y_k) of two block sums from the lag covariances.

    Cov(Y_j, Y_k) = sum over the p*p index pairs of c_{|a-b|}; grouped by lag
    this is sum_{d=-(p-1)}^{p-1} (p - |d|) * c_{||j-k|p + d|}.
    """
    m, p = scheme.block_count, scheme.block_len
    if not (1 <= j <= m and 1 <= k <= m):
        raise ValueError(f"block indices must lie in 1..{m}, got ({j}, {k})")
    delta = abs(j - k) * p
    d = np.arange(-(p - 1), p)
    lags = np.abs(delta + d)
    c = autocovariances(model, int(lags.max()))
    return float(np.sum((p - np.abs(d)) * c[lags]))


def block_covariance_identity(model: MAModel, scheme: BlockScheme) -> tuple[float, float]:
    """Both routes to the total inter-block covariance.

    lhs sums Cov(Y_j, Y_k) over ordered pairs j > k; rhs is
    (s_{mp}^2 - m * s_p^2) / 2, from Var(sum of blocks) = S_{mp} variance.
    The two must agree to floating-point accuracy; the test suite pins 1e-10
    relative to the variance scale.
    """
    m, p = scheme.block_count, scheme.block_len
    lhs = 0.0
    for j in range(2, m + 1):
        for k in range(1, j):
            lhs += block_covariance(model, scheme, j, k)
    rhs = (partial_sum_variance(model, m * p) - m * partial_sum_variance(model, p)) / 2.0
    return lhs, rhs


# ---------------------------------------------------------------------------
# Joint CF vs product of marginals (positive-dependence inequality)
# ---------------------------------------------------------------------------


def _newman_estimator(r: int, rng: np.random.Generator, model, scheme, t_vec):
    path = path_from_rng(model, scheme.n, rng)
    y = block_sums(path, scheme).blocks
    angles = t_vec * y
    total = angles.sum()
    out = np.empty(2 * (y.size + 1))
    out[0], out[1] = math.cos(total), math.sin(total)
    out[2::2] = np.cos(angles)
    out[3::2] = np.sin(angles)
    return out


def newman_check(
    model: MAModel, scheme: BlockScheme, t_vec: Sequence[float], mc: MCConfig
) -> tuple[MonteCarloEstimate, float]:
    """Empirical gap |E e^{i sum t_j Y_j} - prod_j E e^{i t_j Y_j}| against its
    exact covariance bound sum_{i<j} |t_i||t_j| Cov(Y_i, Y_j).

    Both CF sides come from a single Monte Carlo run. The reported standard
    error is an influence-function (delta method) estimate for the gap, so the
    inequality check "gap <= bound + 4*stderr" has the right noise scale even
    when the true gap is zero. Returns (gap estimate, exact bound).
    """
    t = np.asarray(t_vec, dtype=float)
    m = scheme.block_count
    if t.shape != (m,):
        raise ValueError(f"t_vec must have length block_count = {m}, got {t.shape}")

    rows = mc_collect(
        partial(_newman_estimator, model=model, scheme=scheme, t_vec=t), mc
    )
    R = rows.shape[0]
    joint = rows[:, 0] + 1j * rows[:, 1]
    margs = rows[:, 2::2] + 1j * rows[:, 3::2]  # (R, m)
    joint_mean = joint.mean()
    marg_means = margs.mean(axis=0)

    # product of all marginal means but one, via prefix/suffix products
    prefix = np.concatenate([[1.0 + 0j], np.cumprod(marg_means)[:-1]])
    suffix = np.concatenate([np.cumprod(marg_means[::-1])[-2::-1], [1.0 + 0j]])
    leave_one_out = prefix * suffix
    product = prefix[-1] * marg_means[-1]

    gap = joint_mean - product
    # linearization of the gap in the replicate averages
    influence = joint - margs @ leave_one_out
    if R > 1:
        se = math.hypot(influence.real.std(ddof=1), influence.imag.std(ddof=1)) / math.sqrt(R)
    else:
        se = 0.0

    bound = 0.0
    for jdx in range(2, m + 1):
        for kdx in range(1, jdx):
            bound += abs(t[jdx - 1]) * abs(t[kdx - 1]) * block_covariance(model, scheme, jdx, kdx)

    estimate = MonteCarloEstimate(
        value=float(abs(gap)), stderr=float(se), replicates=R, master_seed=mc.master_seed
    )
    return estimate, float(bound)


# ---------------------------------------------------------------------------
# CF of the coupling-block sum vs its Gaussian surrogate
# ---------------------------------------------------------------------------


def _marginal_cf_estimator(r: int, rng: np.random.Generator, model, block_len, freq):
    y = draw_partial_sum(model, block_len, rng)
    return np.array([math.cos(freq * y), math.sin(freq * y)])


def cf_product_deviation(
    model: MAModel, scheme: BlockScheme, t: float, mc: MCConfig
) -> tuple[MonteCarloEstimate, float]:
    """Distance between the CF of the coupling-block sum and its Gaussian target.

    The coupling blocks are iid, so the sum's CF is one marginal CF to the
    power block_count; the marginal is estimated once (a block_count-fold
    variance saving) and the target is exp(-m t^2 s_p^2 / (2 s_n^2)). The
    standard error amplifies the marginal CF error by the power-rule factor
    m |phi|^(m-1). Returns (deviation estimate, gaussian target).
    """
    if not math.isfinite(t):
        raise ValueError(f"frequency t must be finite, got {t}")
    m, p = scheme.block_count, scheme.block_len
    s_n = math.sqrt(partial_sum_variance(model, scheme.n))
    s_p_sq = partial_sum_variance(model, p)
    target = math.exp(-m * t * t * s_p_sq / (2.0 * s_n * s_n))

    means, stderrs = mc_reduce(
        partial(_marginal_cf_estimator, model=model, block_len=p, freq=t / s_n), mc
    )
    phi = complex(means[0], means[1])
    deviation = abs(phi**m - target)
    se = m * abs(phi) ** (m - 1) * math.hypot(stderrs[0], stderrs[1])
    estimate = MonteCarloEstimate(
        value=float(deviation), stderr=float(se), replicates=mc.replicates, master_seed=mc.master_seed
    )
    return estimate, target


# ---------------------------------------------------------------------------
# Smoothing bound
# ---------------------------------------------------------------------------


def esseen_distance_bound(samples, params: SmoothingParameters) -> float:
    """Numerical smoothing bound on sup |F_samples - Phi| (module docstring).

    The integrand |f(t) - phi(t)| / |t| is even, so integration runs over
    [0, T] and is doubled. At t = 0 the limit is |mean(samples)| (the order-t
    coefficients of the two CFs differ by i times the sample mean), which
    removes the apparent singularity without any cutoff.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("esseen_distance_bound needs at least one sample")
    mean_abs = abs(float(x.mean()))

    def integrand(t: float) -> float:
        if t == 0.0:
            return mean_abs
        tx = t * x
        diff_re = float(np.cos(tx).mean()) - math.exp(-0.5 * t * t)
        diff_im = float(np.sin(tx).mean())
        return math.hypot(diff_re, diff_im) / t

    result = integrate.quad(integrand, 0.0, params.T, limit=200, full_output=1)
    if len(result) > 3:
        raise QuadratureError(f"CF-distance quadrature failed: {result[3]}")
    integral = result[0]
    return 2.0 * params.integral_constant * integral + params.tail_constant / params.T
