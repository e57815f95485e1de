"""Stationary associated sequence models with exactly computable covariances.

A model is a finite moving average X_t = sum_k a_k Z_{t-k} with nonnegative
weights a_0..a_K and iid centered innovations Z. Nonnegative weights make the
sequence associated (coordinatewise nondecreasing functions of independent
variables), and every second-order quantity -- lag covariances c_j, partial-sum
variances s_n^2, the tail coefficient u(n) = sum_{j>=n} c_j, and the long-run
variance sigma^2 -- has an exact finite-sum formula. That exactness is what the
rest of the package leans on: Monte Carlo experiments are always checked
against closed-form second moments, never against estimated ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .errors import ConsistencyError, MomentOrderError

#: Sentinel returned by decay-exponent fits when the residual sequence is
#: identically zero (iid models), so no finite exponent applies.
EXACT = "exact"

DecayEstimate = Union[float, str]

_GAUSSIAN = "standard-gaussian"
_EXPONENTIAL = "centered-exponential"
_PARETO = "centered-pareto"


@dataclass(frozen=True)
class InnovationLaw:
    """Centered innovation distribution with known variance and moment range.

    kind is one of ``standard-gaussian``, ``centered-exponential`` (parameter
    ``rate``) or ``centered-pareto`` (parameter ``tail_index``). All three are
    centered to mean zero. ``q_max`` is the supremum of finite absolute moment
    orders: infinity for the first two, the tail index for the Pareto law
    (whose moments of order >= tail_index diverge).
    """

    kind: str
    rate: float = 1.0
    tail_index: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == _GAUSSIAN:
            pass
        elif self.kind == _EXPONENTIAL:
            if not (self.rate > 0 and math.isfinite(self.rate)):
                raise ValueError(f"exponential rate must be positive, got {self.rate}")
        elif self.kind == _PARETO:
            if not (self.tail_index > 2 and math.isfinite(self.tail_index)):
                raise ValueError(
                    f"pareto tail index must exceed 2 for a finite variance, got {self.tail_index}"
                )
        else:
            raise ValueError(f"unknown innovation kind {self.kind!r}")

    @staticmethod
    def gaussian() -> "InnovationLaw":
        return InnovationLaw(_GAUSSIAN)

    @staticmethod
    def exponential(rate: float = 1.0) -> "InnovationLaw":
        return InnovationLaw(_EXPONENTIAL, rate=rate)

    @staticmethod
    def pareto(tail_index: float) -> "InnovationLaw":
        return InnovationLaw(_PARETO, tail_index=tail_index)

    @property
    def variance(self) -> float:
        if self.kind == _GAUSSIAN:
            return 1.0
        if self.kind == _EXPONENTIAL:
            return 1.0 / (self.rate * self.rate)
        b = self.tail_index
        return b / ((b - 1.0) ** 2 * (b - 2.0))

    @property
    def q_max(self) -> float:
        """Supremum of q with E|Z|^q finite."""
        return self.tail_index if self.kind == _PARETO else math.inf

    def require_moment(self, q: float) -> None:
        """Refuse computations that need E|Z|^q with q at or above q_max."""
        if q >= self.q_max:
            raise MomentOrderError(
                f"moment order {q} requested but {self.kind} law only has "
                f"finite moments below {self.q_max}"
            )

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Draw centered innovations."""
        if self.kind == _GAUSSIAN:
            return rng.standard_normal(size)
        if self.kind == _EXPONENTIAL:
            return (rng.standard_exponential(size) - 1.0) / self.rate
        # classical Pareto on [1, inf) is 1 + Lomax; center by the mean b/(b-1)
        b = self.tail_index
        return rng.pareto(b, size) + 1.0 - b / (b - 1.0)

    def sample_iid_sum(self, rng: np.random.Generator, count: int, size=None):
        """Draw the sum of ``count`` iid innovations, exactly in law.

        Gaussian and exponential sums have closed-form laws (normal and
        centered gamma), so one draw suffices regardless of ``count``. The
        Pareto sum has no such form and falls back to summing raw draws.
        """
        if count == 0:
            return 0.0 if size is None else np.zeros(size)
        if self.kind == _GAUSSIAN:
            return math.sqrt(count) * rng.standard_normal(size)
        if self.kind == _EXPONENTIAL:
            return (rng.standard_gamma(count, size) - count) / self.rate
        if size is None:
            return float(self.sample(rng, count).sum())
        return self.sample(rng, (size, count)).sum(axis=1)


@dataclass(frozen=True)
class MAModel:
    """Finite moving average of iid centered innovations.

    ``weights`` is the sequence a_0..a_K with a_0 > 0 and every a_k >= 0;
    nonnegativity is what guarantees association and is enforced here.
    """

    weights: tuple[float, ...]
    innovation: InnovationLaw

    def __post_init__(self) -> None:
        if len(self.weights) == 0:
            raise ValueError("weight sequence must be nonempty")
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative (association requires it)")
        if w[0] <= 0:
            raise ValueError("leading weight a_0 must be strictly positive")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def order(self) -> int:
        """Largest lag K with a_K present; covariances vanish beyond it."""
        return len(self.weights) - 1

    @property
    def weight_sum(self) -> float:
        return float(np.sum(self.weights))

    @property
    def is_iid(self) -> bool:
        """True when no lag beyond 0 carries weight, i.e. X_t are independent."""
        return all(x == 0.0 for x in self.weights[1:])


@dataclass(frozen=True, eq=False)
class CovarianceProfile:
    """Second-order summary of a model: sigma_1^2, c_j, sigma^2 and decay exponents.

    ``theta`` is the variance-ratio decay exponent (|s_n^2/(n sigma^2) - 1| =
    O(n^-theta)) and ``delta`` the tail-sum exponent (u(n) = O(n^-delta)). For
    a truncated moving average these take their effective values: theta = 1
    for any dependent model (the sum_j j c_j / n term never vanishes), and
    delta = inf because u(n) is exactly zero beyond the truncation lag. For an
    iid model both are inf (the residuals are identically zero). Pass an
    ``n_grid`` to :func:`covariance_profile` to get fitted finite-sample
    exponents instead.
    """

    sigma1_sq: float
    autocov: Callable[[int], float]
    sigma_sq: float
    theta: float
    delta: float


def geometric_weights(rho: float, K: int) -> tuple[float, ...]:
    """Weights (1, rho, rho^2, ..., rho^K): exponentially decaying covariances."""
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    return tuple(rho**k for k in range(K + 1))


def power_weights(beta: float, K: int) -> tuple[float, ...]:
    """Weights a_k = (k+1)^-beta: covariance tails decaying only polynomially."""
    if not (beta > 1.0):
        raise ValueError(f"beta must exceed 1 for summable weights, got {beta}")
    if K < 0:
        raise ValueError(f"K must be a nonnegative integer, got {K}")
    return tuple((k + 1.0) ** (-beta) for k in range(K + 1))


@lru_cache(maxsize=256)
def _autocov_array(model: MAModel) -> np.ndarray:
    """Exact lag covariances c_0..c_K as an array.

    c_j = Var(Z) * sum_k a_k a_{k+j}, the positive half of the weight
    autocorrelation.
    """
    a = np.asarray(model.weights, dtype=float)
    acf = np.correlate(a, a, mode="full")[len(a) - 1 :]
    return model.innovation.variance * acf


def autocovariance(model: MAModel, j: int) -> float:
    """Exact lag-j covariance c_j = Cov(X_1, X_{1+j}); zero beyond the order."""
    if j < 0:
        raise ValueError(f"lag must be nonnegative, got {j}")
    c = _autocov_array(model)
    return float(c[j]) if j < c.size else 0.0


def autocovariances(model: MAModel, max_lag: int) -> np.ndarray:
    """Exact covariances c_0..c_{max_lag} as an array (zero beyond the order)."""
    if max_lag < 0:
        raise ValueError(f"max_lag must be nonnegative, got {max_lag}")
    c = _autocov_array(model)
    out = np.zeros(max_lag + 1)
    upto = min(max_lag + 1, c.size)
    out[:upto] = c[:upto]
    return out


def partial_sum_variance(model: MAModel, n: int) -> float:
    """Exact Var(S_n) = n*c_0 + 2*sum_{j=1}^{n-1} (n-j)*c_j."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    c = _autocov_array(model)
    jmax = min(n - 1, c.size - 1)
    if jmax < 1:
        return n * float(c[0])
    j = np.arange(1, jmax + 1)
    return n * float(c[0]) + 2.0 * float(np.sum((n - j) * c[1 : jmax + 1]))


def cox_grimmett(model: MAModel, n: int) -> float:
    """Tail covariance sum u(n) = sum_{j>=n} c_j (finite: c_j = 0 beyond the order)."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    c = _autocov_array(model)
    return float(np.sum(c[n:])) if n < c.size else 0.0


def long_run_variance(model: MAModel) -> float:
    """Long-run variance sigma^2 = c_0 + 2*sum_{j>=1} c_j.

    Cross-checked against the equivalent closed form Var(Z)*(sum_k a_k)^2;
    a disagreement beyond 1e-10 relative means the covariance algebra is
    broken and raises :class:`ConsistencyError`.
    """
    c = _autocov_array(model)
    by_covariances = float(c[0] + 2.0 * np.sum(c[1:]))
    by_weights = model.innovation.variance * model.weight_sum**2
    if abs(by_covariances - by_weights) > 1e-10 * max(abs(by_covariances), abs(by_weights)):
        raise ConsistencyError(
            f"long-run variance mismatch: covariance route {by_covariances!r} "
            f"vs squared-weight route {by_weights!r}"
        )
    return by_covariances


def _log_log_slope(n_grid: np.ndarray, values: np.ndarray) -> DecayEstimate:
    """Least-squares slope of log(values) against log(n), negated.

    Nonpositive entries (exact zeros from truncation) are dropped; if fewer
    than two points survive the sequence is treated as identically zero.
    """
    keep = values > 0.0
    if keep.sum() < 2:
        return EXACT
    slope = np.polyfit(np.log(n_grid[keep]), np.log(values[keep]), 1)[0]
    return float(-slope)


def decay_exponents(model: MAModel, n_grid) -> tuple[DecayEstimate, DecayEstimate]:
    """Fit the effective decay exponents (theta, delta) over a grid of n.

    theta is fitted from |s_n^2/(n sigma^2) - 1| and delta from u(n), both by
    log-log least squares. Models whose residuals vanish identically (iid)
    get the :data:`EXACT` marker instead of a number.
    """
    grid = np.asarray(list(n_grid), dtype=int)
    if grid.size < 4 or np.any(np.diff(grid) <= 0):
        raise ValueError("n_grid must be increasing with at least 4 entries")
    sigma_sq = long_run_variance(model)
    ratio_resid = np.array(
        [abs(partial_sum_variance(model, int(n)) / (n * sigma_sq) - 1.0) for n in grid]
    )
    tails = np.array([cox_grimmett(model, int(n)) for n in grid])
    return _log_log_slope(grid, ratio_resid), _log_log_slope(grid, tails)


def covariance_profile(model: MAModel, n_grid=None) -> CovarianceProfile:
    """Assemble the second-order profile of a model.

    Without ``n_grid`` the exponents are the exact effective ones of the
    truncated model (see :class:`CovarianceProfile`); with a grid they are
    fitted via :func:`decay_exponents`, with EXACT mapped to inf.
    """
    sigma_sq = long_run_variance(model)
    if n_grid is None:
        theta = math.inf if model.is_iid else 1.0
        delta = math.inf
    else:
        theta_fit, delta_fit = decay_exponents(model, n_grid)
        theta = math.inf if theta_fit == EXACT else float(theta_fit)
        delta = math.inf if delta_fit == EXACT else float(delta_fit)
    return CovarianceProfile(
        sigma1_sq=autocovariance(model, 0),
        autocov=lambda j: autocovariance(model, j),
        sigma_sq=sigma_sq,
        theta=theta,
        delta=delta,
    )
