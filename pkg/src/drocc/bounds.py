"""One-sided confidence bounds on the optimal value from replicated batches."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ambiguity import AmbiguitySpec, build_discretized
from .errors import AllCandidatesInfeasible, InvalidAlpha, TooFewFeasibleReplicates
from .geometry import sample_uniform
from .problem import ProblemInstance
from .solver import inner_worst_case, solve_sampled_model

# stream tags for derive_seed
CANDIDATE_STREAM = 0
UPPER_STREAM = 1
LOWER_STREAM = 2


def _t_density(nu: float):
    log_norm = (math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)
                - 0.5 * math.log(nu * math.pi))
    power = -(nu + 1) / 2

    def f(t: float) -> float:
        return math.exp(log_norm + power * math.log1p(t * t / nu))
    return f


def _adaptive_simpson(f, a: float, b: float, eps: float, depth: int = 50) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, eps, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, m, fa, flm, fm, left, eps / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, eps / 2, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), eps, depth)


def t_cdf(t: float, nu: float) -> float:
    """Student-t CDF by adaptive Simpson quadrature of the density."""
    if t < 0:
        return 1.0 - t_cdf(-t, nu)
    f = _t_density(nu)
    # split the range so each piece is smooth on its own scale
    total, lo = 0.0, 0.0
    for hi in (1.0, 4.0, 16.0, 64.0):
        if t <= lo:
            break
        seg = min(t, hi)
        total += _adaptive_simpson(f, lo, seg, 1e-12)
        lo = seg
    if t > lo:
        total += _adaptive_simpson(f, lo, t, 1e-12)
    return 0.5 + total


@lru_cache(maxsize=256)
def t_critical(alpha: float, nu: int) -> float:
    """Value with upper-tail probability ``alpha`` under Student's t with ``nu`` dof.

    Found by bisection on the quadrature CDF, starting from the bracket
    ``[0, 200]`` and widening it for extreme tails; absolute accuracy 1e-9.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if nu < 1:
        raise ValueError("degrees of freedom must be positive")
    if alpha == 0.5:
        return 0.0
    if alpha > 0.5:
        return -t_critical(1.0 - alpha, nu)
    target = 1.0 - alpha
    lo, hi = 0.0, 200.0
    while t_cdf(hi, nu) < target:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, nu) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class Side(str, enum.Enum):
    UPPER = "Upper"
    LOWER = "Lower"


@dataclass(frozen=True)
class BoundEstimate:
    replicate_values: tuple[float, ...]
    mean: float
    sigma_hat: float
    t_value: float
    bound: float
    side: Side
    alpha: float
    omega_size: int
    skipped_replicates: int = 0


def summarize(values, alpha: float, side: Side, omega_size: int, skipped: int = 0) -> BoundEstimate:
    """Mean, ``sigma_hat^2 = sum (v - mean)^2 / (M (M - 1))`` and the t-adjusted bound."""
    vals = np.asarray(values, dtype=float)
    m = vals.size
    if m < 2:
        raise TooFewFeasibleReplicates(f"need at least 2 feasible replicates, have {m}")
    mean = float(np.mean(vals))
    sigma = math.sqrt(float(np.sum((vals - mean) ** 2)) / (m * (m - 1)))
    t = t_critical(alpha, m - 1)
    bound = mean + t * sigma if side is Side.UPPER else mean - t * sigma
    return BoundEstimate(tuple(vals.tolist()), mean, sigma, t, bound, side, alpha,
                         omega_size, skipped)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Independent 63-bit seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _check_replicates(count: int, alpha: float) -> None:
    if count < 2:
        raise ValueError("at least two replicates are required")
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")


def upper_bound(instance: ProblemInstance, spec: AmbiguitySpec, x_bar, omega_size: int,
                M: int = 10, alpha: float = 0.05, master_seed: int = 0) -> BoundEstimate:
    """Upper confidence bound from ``M`` inner solves at a fixed decision ``x_bar``.

    Each replicate uses an independent uniform batch of ``omega_size``
    points; batches where ``x_bar`` is inner-infeasible are skipped.
    """
    _check_replicates(M, alpha)
    values, skipped = [], 0
    for m in range(M):
        samples = sample_uniform(instance.support, omega_size,
                                 derive_seed(master_seed, UPPER_STREAM, m))
        aset = build_discretized(spec, samples, instance.support)
        sol = inner_worst_case(instance, x_bar, aset)
        if sol.feasible:
            values.append(sol.value)
        else:
            skipped += 1
    return summarize(values, alpha, Side.UPPER, omega_size, skipped)


def lower_bound(instance: ProblemInstance, spec: AmbiguitySpec, omega_size: int,
                M_prime: int = 10, alpha: float = 0.05, master_seed: int = 0) -> BoundEstimate:
    """Lower confidence bound from ``M_prime`` full solves on independent batches."""
    _check_replicates(M_prime, alpha)
    values, skipped = [], 0
    for m in range(M_prime):
        samples = sample_uniform(instance.support, omega_size,
                                 derive_seed(master_seed, LOWER_STREAM, m))
        try:
            values.append(solve_sampled_model(instance, spec, samples).v_hat)
        except AllCandidatesInfeasible:
            skipped += 1
    return summarize(values, alpha, Side.LOWER, omega_size, skipped)


def candidate_decision(instance: ProblemInstance, spec: AmbiguitySpec, omega_size: int,
                       master_seed: int = 0):
    """``x_bar`` for the upper bound: the solution on one extra independent batch."""
    samples = sample_uniform(instance.support, omega_size,
                             derive_seed(master_seed, CANDIDATE_STREAM, 0))
    return solve_sampled_model(instance, spec, samples).x_hat


def bound_pair(instance: ProblemInstance, spec: AmbiguitySpec, omega_size: int,
               M: int = 10, M_prime: int = 10, alpha: float = 0.05,
               master_seed: int = 0) -> tuple[BoundEstimate, BoundEstimate]:
    """(lower, upper) estimates sharing one master seed."""
    x_bar = candidate_decision(instance, spec, omega_size, master_seed)
    lower = lower_bound(instance, spec, omega_size, M_prime, alpha, master_seed)
    upper = upper_bound(instance, spec, x_bar, omega_size, M, alpha, master_seed)
    return lower, upper
