"""Closed-form convergence-rate algebra for the block-coupling method.

Everything here is exact arithmetic in the moment order q and the
variance-decay exponent theta. The headline normal-approximation rate for
centered stationary associated sequences is n^(-e) with

    e = theta*(q-2)/(q+2*theta)      for 2 < q <= 8/3,
    e = q*theta/(q+8+8*theta)        for 8/3 <= q < 3,
    e = 3*theta/(11+8*theta)         for q >= 3,

obtained by balancing five error pieces, each polynomial in the block
exponent alpha. ``optimal_alpha`` re-derives the same exponents by direct
max-min optimization over alpha, which doubles as an internal consistency
check on the piecewise case analysis.

The two branch formulas agree at q = 8/3; the low-q branch is used there.
Slowly varying factors (powers of b_n = (log n)^b with b < 0) are carried as
string tags, never folded into the exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "RateBound",
    "ComponentPiece",
    "ModDevWindows",
    "clt_rate_exponent",
    "mu_generalized_rate",
    "component_exponents",
    "optimal_alpha",
    "moddev_windows",
    "epsilon_window",
    "frolov_block_threshold",
]

LOW_Q = "low-q"
MID_Q = "mid-q"
HIGH_Q = "high-q"


@dataclass(frozen=True)
class RateBound:
    """A rate n^(-exponent) with its q-regime and the alpha that attains it."""

    exponent: float
    regime: str
    alpha_star: float
    log_factor: Optional[str] = None


@dataclass(frozen=True)
class ComponentPiece:
    """One error component: its alpha-dependent exponent and slowly varying tag.

    ``exponent`` is None where the component gives no decay at all (the
    coupling piece for alpha >= theta/(1+theta)).
    """

    exponent: Optional[float]
    log_factor: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.exponent is not None


@dataclass(frozen=True)
class QInterval:
    """Interval of admissible moment orders; lo_open marks clipping at q = 2."""

    lo: float
    hi: float
    lo_open: bool = False


@dataclass(frozen=True)
class ModDevWindows:
    """Feasibility windows for the moderate-deviation normalization.

    ``alpha_window`` is the open interval (1/2, (2*theta - lam)/(2*theta + 2));
    it is nonempty exactly when theta > 1 + lam, which is the ``feasible``
    flag. ``epsilon_window`` is the open interval (0, (q*alpha - lam)/(2q))
    evaluated at the midpoint of the alpha window (None when infeasible);
    :func:`epsilon_window` gives it at any alpha.
    """

    lam: float
    alpha_window: tuple[float, float]
    epsilon_window: Optional[tuple[float, float]]
    feasible: bool


def _check_q_theta(q: float, theta: float) -> None:
    if not q > 2:
        raise ValueError(f"moment order q must exceed 2, got {q}")
    if not theta > 0:
        raise ValueError(f"decay exponent theta must be positive, got {theta}")


def clt_rate_exponent(q: float, theta: float) -> RateBound:
    """Best normal-approximation rate exponent for moment order q and decay theta.

    theta = inf is accepted and returns the limiting exponent of the regime
    ((q-2)/2, q/8 and 3/8 respectively).
    """
    _check_q_theta(q, theta)
    if q <= 8.0 / 3.0:
        regime = LOW_Q
        if math.isinf(theta):
            exponent, alpha_star = (q - 2.0) / 2.0, 1.0
        else:
            exponent = theta * (q - 2.0) / (q + 2.0 * theta)
            alpha_star = 2.0 * theta / (q + 2.0 * theta)
    elif q < 3.0:
        regime = MID_Q
        if math.isinf(theta):
            exponent, alpha_star = q / 8.0, 1.0
        else:
            exponent = q * theta / (q + 8.0 + 8.0 * theta)
            alpha_star = 8.0 * theta / (q + 8.0 + 8.0 * theta)
    else:
        regime = HIGH_Q
        if math.isinf(theta):
            exponent, alpha_star = 3.0 / 8.0, 1.0
        else:
            exponent = 3.0 * theta / (11.0 + 8.0 * theta)
            alpha_star = 8.0 * theta / (11.0 + 8.0 * theta)
    return RateBound(exponent=exponent, regime=regime, alpha_star=alpha_star)


def mu_generalized_rate(mu: float, theta: float) -> tuple[float, QInterval]:
    """Rate exponent mu*theta/(mu+1+theta) from a remainder cutoff n^(-mu*alpha).

    Valid for moment orders q in [2*mu/(1-2*mu), 3], clipped to (2, 3] since
    the theory needs q > 2. At mu = 3/8 the interval collapses to {3} and the
    exponent coincides with :func:`clt_rate_exponent` at q = 3.
    """
    if not (0.0 < mu < 0.5):
        raise ValueError(f"mu must lie in (0, 1/2), got {mu}")
    if not theta > 0:
        raise ValueError(f"decay exponent theta must be positive, got {theta}")
    exponent = mu if math.isinf(theta) else mu * theta / (mu + 1.0 + theta)
    lo_raw = 2.0 * mu / (1.0 - 2.0 * mu)
    if lo_raw > 2.0:
        interval = QInterval(lo=lo_raw, hi=3.0, lo_open=False)
    else:
        interval = QInterval(lo=2.0, hi=3.0, lo_open=True)
    return exponent, interval


def component_exponents(alpha: float, q: float, theta: float) -> dict[str, ComponentPiece]:
    """The five error-component exponents at block exponent alpha.

    Keys and formulas (rates are n^(-exponent), tags mark slowly varying
    factors that multiply the power):

    - ``remainder_tail``: q*alpha/8, the discarded-remainder tail.
    - ``coupling``: alpha/2 (tag 1/b_n) for alpha < 2*theta/(3+2*theta), else
      theta - alpha*(1+theta) (tag b_n^2) while that is positive, i.e. for
      alpha < theta/(1+theta); beyond that the coupling distance does not
      decay and the piece is invalid.
    - ``cf``: alpha*(q-2)/2 capped at alpha/2 for q >= 3, the
      characteristic-function product error.
    - ``gaussian``: alpha/2 (tag 1/b_n) for alpha <= 2*theta/(1+2*theta), else
      (1-alpha)*theta, the blockwise-normal vs standard-normal error.
    - ``smoothing``: 3*alpha/8, the smoothing-inequality remainder.
    """
    _check_q_theta(q, theta)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")

    pieces: dict[str, ComponentPiece] = {}
    pieces["remainder_tail"] = ComponentPiece(q * alpha / 8.0)

    if alpha < 2.0 * theta / (3.0 + 2.0 * theta):
        pieces["coupling"] = ComponentPiece(alpha / 2.0, log_factor="1/b_n")
    elif alpha < theta / (1.0 + theta):
        pieces["coupling"] = ComponentPiece(theta - alpha * (1.0 + theta), log_factor="b_n^2")
    else:
        pieces["coupling"] = ComponentPiece(None, log_factor="b_n^2")

    pieces["cf"] = ComponentPiece(alpha * (min(q, 3.0) - 2.0) / 2.0)

    if alpha <= 2.0 * theta / (1.0 + 2.0 * theta):
        pieces["gaussian"] = ComponentPiece(alpha / 2.0, log_factor="1/b_n")
    else:
        pieces["gaussian"] = ComponentPiece((1.0 - alpha) * theta)

    pieces["smoothing"] = ComponentPiece(3.0 * alpha / 8.0)
    return pieces


def _min_exponent(alpha: float, q: float, theta: float) -> float:
    """min over the five pieces; -inf where any piece is invalid."""
    pieces = component_exponents(alpha, q, theta)
    worst = math.inf
    for piece in pieces.values():
        if piece.exponent is None:
            return -math.inf
        worst = min(worst, piece.exponent)
    return worst


def optimal_alpha(q: float, theta: float) -> tuple[float, float]:
    """Maximize the min component exponent over alpha by breakpoint enumeration.

    Every component is piecewise linear in alpha, so the min is too, and the
    maximum sits at a region boundary or a pairwise intersection of the
    component lines. All candidates are enumerated exactly; ties resolve to
    the smallest alpha. The result must (and does, see the test suite) equal
    :func:`clt_rate_exponent`.
    """
    _check_q_theta(q, theta)
    if math.isinf(theta):
        raise ValueError("optimal_alpha needs a finite theta")

    a1 = 2.0 * theta / (3.0 + 2.0 * theta)  # coupling switches branch
    a2 = theta / (1.0 + theta)  # coupling stops decaying
    g1 = 2.0 * theta / (1.0 + 2.0 * theta)  # gaussian switches branch

    # Slopes of the increasing lines through the origin.
    origin_slopes = [q / 8.0, 0.5, (min(q, 3.0) - 2.0) / 2.0, 3.0 / 8.0]

    candidates = {a1, g1}
    # Intersections of each origin line with the two decreasing branches
    # theta - alpha*(1+theta) (coupling) and theta - alpha*theta (gaussian).
    for slope in origin_slopes:
        candidates.add(theta / (slope + 1.0 + theta))
        candidates.add(theta / (slope + theta))
    # Intersection of the two decreasing branches happens at alpha = 0 shift;
    # they never cross for alpha > 0 (difference is alpha), so nothing to add.

    best_alpha = math.nan
    best_value = -math.inf
    for alpha in sorted(candidates):
        if not (0.0 < alpha < a2):
            continue
        value = _min_exponent(alpha, q, theta)
        if value > best_value + 1e-15:
            best_value = value
            best_alpha = alpha
    return best_alpha, best_value


def moddev_windows(q: float, theta: float, lam: float) -> ModDevWindows:
    """Feasibility windows for moderate deviations at level x_n = sqrt(lam*log n).

    Feasible iff theta > 1 + lam (equivalently the alpha window is nonempty).
    Infeasible inputs return feasible=False with an empty window rather than
    raising.
    """
    _check_q_theta(q, theta)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    upper = 1.0 if math.isinf(theta) else (2.0 * theta - lam) / (2.0 * theta + 2.0)
    feasible = upper > 0.5
    alpha_window = (0.5, upper)
    eps_window = None
    if feasible:
        alpha_mid = 0.5 * (alpha_window[0] + alpha_window[1])
        eps_window = epsilon_window(q, lam, alpha_mid)
    return ModDevWindows(
        lam=lam, alpha_window=alpha_window, epsilon_window=eps_window, feasible=feasible
    )


def epsilon_window(q: float, lam: float, alpha: float) -> tuple[float, float]:
    """Open interval (0, (q*alpha - lam)/(2q)) of valid truncation exponents."""
    if not q > 2:
        raise ValueError(f"moment order q must exceed 2, got {q}")
    return (0.0, (q * alpha - lam) / (2.0 * q))


def frolov_block_threshold(alpha: float, q: float) -> float:
    """Largest lambda for which coupling-block sums satisfy the
    moderate-deviation equivalence: alpha*(q-2)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not q > 2:
        raise ValueError(f"moment order q must exceed 2, got {q}")
    return alpha * (q - 2.0)
