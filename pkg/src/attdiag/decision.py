"""Minimax policy choice over an identified set, decision fragility, and the
standard-error-scaled bias tolerance.

The two-action problem: utility equals the realized effect under Treat and
zero under NoTreat, so worst-case regret over an interval [lo, hi] is
max(0, -lo) for Treat and max(0, hi) for NoTreat. Ties resolve to NoTreat
(status quo).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ValidationError
from .identification import CurvatureSweep, Interval


class PolicyDecision(enum.Enum):
    TREAT = "treat"
    NO_TREAT = "no_treat"


@dataclass(frozen=True)
class RegretProfile:
    decision: PolicyDecision
    worst_case_regret: float

    def __post_init__(self):
        if self.worst_case_regret < 0:
            raise ValidationError("worst-case regret cannot be negative")


def minimax_rule(interval: Interval):
    """Pick the action minimizing worst-case regret over the interval.

    Returns (decision, (treat_profile, no_treat_profile)).
    """
    treat = RegretProfile(PolicyDecision.TREAT, max(0.0, -interval.lo))
    no_treat = RegretProfile(PolicyDecision.NO_TREAT, max(0.0, interval.hi))
    decision = (
        PolicyDecision.TREAT
        if treat.worst_case_regret < no_treat.worst_case_regret
        else PolicyDecision.NO_TREAT
    )
    return decision, (treat, no_treat)


def fragility_index(sweep: CurvatureSweep, interval_at=None, tol: float = 1e-4) -> float:
    """Smallest grid delta at which the minimax decision flips away from the
    baseline (the decision at the smallest delta), +inf if it never does.

    When `interval_at` (a callable delta -> Interval) is given the flip
    point is refined by bisection between the straddling grid points.
    """
    if not sweep.deltas:
        raise ValidationError("sweep is empty")
    baseline = minimax_rule(sweep.intervals[0])[0]
    flip_idx = None
    for i in range(1, len(sweep.deltas)):
        if minimax_rule(sweep.intervals[i])[0] != baseline:
            flip_idx = i
            break
    if flip_idx is None:
        return math.inf
    flip_delta = float(sweep.deltas[flip_idx])
    if interval_at is None:
        return flip_delta
    lo = float(sweep.deltas[flip_idx - 1])
    hi = flip_delta
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if minimax_rule(interval_at(mid))[0] != baseline:
            hi = mid
        else:
            lo = mid
    return hi


def bias_robustness(tau_hat: float, se: float, grid_step: float = 0.5) -> float:
    """Smallest grid multiple of grid_step such that zero enters
    [tau_hat - delta*se, tau_hat + delta*se].

    Equals ceil((|tau_hat|/se) / grid_step) * grid_step, with a one-ulp
    guard so the returned delta always satisfies delta*se >= |tau_hat|.
    """
    if not (se > 0):
        raise ValidationError("se must be > 0")
    if not (grid_step > 0):
        raise ValidationError("grid_step must be > 0")
    if not math.isfinite(tau_hat):
        raise ValidationError("tau_hat must be finite")
    if tau_hat == 0.0:
        return 0.0
    ratio = abs(tau_hat) / se
    steps = max(0, math.ceil(ratio / grid_step - 1e-12))
    delta = steps * grid_step
    if delta * se < abs(tau_hat):  # ratio underflow or grid-point rounding
        delta = (steps + 1) * grid_step
    return delta


def bias_robustness_curve(tau_hat: float, se: float, deltas):
    """Interval endpoints tau_hat -/+ delta*se along a delta grid (the
    bias-tolerance plot)."""
    return [Interval(tau_hat - d * se, tau_hat + d * se) for d in deltas]
