"""Inner worst-case problems and the outer search of the sampled model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .ambiguity import (AmbiguityMode, AmbiguitySpec, DiscretizedAmbiguitySet,
                        build_discretized, membership, theoretical_CH)
from .errors import (AllCandidatesInfeasible, MissingConstant, NoFeasibleStart,
                     NonPositiveAlpha)
from .geometry import (DEFAULT_GRID_PER_DIM, SampleSet, SupportBox, covering_radius,
                       quantize_greedy)
from .lp import LpProblem, LpStatus, solve_lp
from .metrics import DiscreteDistribution
from .problem import FeasibilityMask, ProblemInstance, chance_probability, feasible_mask


class InnerStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    LOCAL_OPTIMAL = "LocalOptimal"


@dataclass(frozen=True)
class InnerSolution:
    value: float
    worst_case: DiscreteDistribution | None
    chance_prob: float
    status: InnerStatus
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is not InnerStatus.INFEASIBLE

    @property
    def p(self) -> np.ndarray | None:
        return None if self.worst_case is None else self.worst_case.weights


@dataclass(frozen=True)
class SolveReport:
    v_hat: float
    x_hat: np.ndarray
    x_index: int
    inner: InnerSolution
    evaluated_candidates: int
    infeasible_candidates: int
    theoretical_gap: float | None = None
    beta: float | None = None


_INFEASIBLE = InnerSolution(math.nan, None, math.nan, InnerStatus.INFEASIBLE)


def _chance_row(instance: ProblemInstance, bits: np.ndarray):
    """Chance constraint as ``-sum_{feasible} p <= -(1 - theta)``; None if vacuous."""
    if instance.theta >= 1.0:
        return None, None
    return -bits.astype(float)[None, :], np.array([-(1.0 - instance.theta)])


def _solution(instance, pts, values, bits, p, value, status, iterations=0):
    dist = DiscreteDistribution.from_weights(pts, np.maximum(p, 0.0))
    prob = chance_probability(FeasibilityMask(bits), p)
    return InnerSolution(float(value), dist, prob, status, iterations)


def inner_worst_case(instance: ProblemInstance, x, aset: DiscretizedAmbiguitySet,
                     **meanvar_options) -> InnerSolution:
    """Worst-case expected objective at ``x`` under the discrete chance constraint.

    Linear modes are solved exactly by one LP.  Mean-variance sets are
    delegated to :func:`inner_worst_case_meanvar`.
    """
    if aset.spec.mode is AmbiguityMode.MEAN_VARIANCE:
        return inner_worst_case_meanvar(instance, x, aset, **meanvar_options)
    pts = aset.samples.points
    values = instance.objective_values(x, pts)
    bits = feasible_mask(instance, x, pts).bits
    if instance.theta < 1.0 and not bits.any():
        return _INFEASIBLE
    row, rhs = _chance_row(instance, bits)
    sol = solve_lp(aset.problem(values, row, rhs))
    if sol.status is not LpStatus.OPTIMAL:
        return _INFEASIBLE
    p = aset.p_from_z(sol.point)
    return _solution(instance, pts, values, bits, p, sol.value, InnerStatus.OPTIMAL, sol.iterations)


def _second_moment(pts, p, center):
    c = pts - center
    return (c * p[:, None]).T @ c


def inner_worst_case_meanvar(instance: ProblemInstance, x, aset: DiscretizedAmbiguitySet,
                             max_iter: int = 50, tol: float = 1e-8, p0=None,
                             max_cuts: int = 100) -> InnerSolution:
    """Local solution of the mean-variance inner problem by successive linearization.

    At iterate ``p_t`` with mean ``mu_t`` the covariance bound is replaced by
    ``E_p[(xi - mu_t)(xi - mu_t)^T] <= gamma_s * sigma0``.  That matrix
    dominates ``Cov(p)``, so the restriction is conservative and contains
    ``p_t``; the objective therefore never decreases.  The restricted
    semidefinite bound is imposed along the eigenvectors of ``sigma0`` and,
    whenever an LP solution violates it, along the offending eigenvector.
    """
    spec = aset.spec
    pts = aset.samples.points
    n = pts.shape[0]
    values = instance.objective_values(x, pts)
    bits = feasible_mask(instance, x, pts).bits
    if instance.theta < 1.0 and not bits.any():
        return _INFEASIBLE
    crow, crhs = _chance_row(instance, bits)
    base_ub = aset.ub_matrix if crow is None else np.vstack([aset.ub_matrix, crow])
    base_rhs = aset.ub_rhs if crow is None else np.concatenate([aset.ub_rhs, crhs])
    target = spec.gamma_s * spec.sigma0
    directions = [v for v in np.linalg.eigh(spec.sigma0)[1].T]

    def restricted(objective, center):
        for _ in range(max_cuts):
            proj = (pts - center) @ np.array(directions).T
            rows = (proj ** 2).T
            rhs = np.array([v @ target @ v for v in directions])
            sol = solve_lp(LpProblem(objective=objective,
                                     eq_matrix=aset.eq_matrix, eq_rhs=aset.eq_rhs,
                                     ub_matrix=np.vstack([base_ub, rows]),
                                     ub_rhs=np.concatenate([base_rhs, rhs])))
            if sol.status is not LpStatus.OPTIMAL:
                return None
            p = sol.point
            lam, vec = np.linalg.eigh(target - _second_moment(pts, p, center))
            if lam[0] >= -1e-12:
                return p
            directions.append(vec[:, 0])
        return None

    def admissible(p):
        if crow is not None and float((crow @ p)[0]) > crhs[0] + 1e-9:
            return False
        return membership(aset, p)[0]

    def repair():
        # alternate: least second moment about c over the linear rows, then c <- mean
        center = spec.mu0
        for _ in range(20):
            spread = -np.sum((pts - center) ** 2, axis=1)
            sol = solve_lp(LpProblem(objective=spread, eq_matrix=aset.eq_matrix,
                                     eq_rhs=aset.eq_rhs, ub_matrix=base_ub, ub_rhs=base_rhs))
            if sol.status is not LpStatus.OPTIMAL:
                return None
            if admissible(sol.point):
                return sol.point
            new_center = sol.point @ pts
            if np.allclose(new_center, center, atol=1e-12):
                break
            center = new_center
        cand = restricted(np.zeros(n), center)
        return cand if cand is not None and admissible(cand) else None

    linear = solve_lp(LpProblem(objective=np.zeros(n), eq_matrix=aset.eq_matrix,
                                eq_rhs=aset.eq_rhs, ub_matrix=base_ub, ub_rhs=base_rhs))
    if linear.status is not LpStatus.OPTIMAL:
        return _INFEASIBLE
    if p0 is not None and admissible(np.asarray(p0, dtype=float)):
        p = np.asarray(p0, dtype=float)
    elif admissible(np.full(n, 1.0 / n)):
        p = np.full(n, 1.0 / n)
    else:
        p = repair()
        if p is None:
            raise NoFeasibleStart("no member of the mean-variance set satisfies the chance row")

    value = float(values @ p)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nxt = restricted(values, p @ pts)
        if nxt is None or not admissible(nxt):
            break
        new_value = float(values @ nxt)
        improved = new_value - value
        if improved > 0:
            p, value = nxt, new_value
        if improved < tol:
            break
    return _solution(instance, pts, values, bits, p, value, InnerStatus.LOCAL_OPTIMAL, iterations)


def theoretical_gap_bound(instance: ProblemInstance, spec: AmbiguitySpec, support: SupportBox,
                          beta: float, alpha: float | None = None,
                          c_h: float | None = None) -> float:
    """``kF C beta + ktheta sqrt(2 kG C_P C beta)`` with ``C`` the set's Hausdorff constant."""
    lip = instance.lipschitz
    missing = [k for k in ("kappa_F", "kappa_G", "kappa_theta", "C_P") if getattr(lip, k) is None]
    if missing:
        raise MissingConstant(f"missing Lipschitz metadata: {', '.join(missing)}")
    if c_h is None:
        c_h = theoretical_CH(spec, support, alpha)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return lip.kappa_F * c_h * beta + lip.kappa_theta * math.sqrt(
        2.0 * lip.kappa_G * lip.C_P * c_h * beta)


def solve_sampled_model(instance: ProblemInstance, spec: AmbiguitySpec, samples: SampleSet,
                        grid_per_dim: int = DEFAULT_GRID_PER_DIM,
                        aset: DiscretizedAmbiguitySet | None = None) -> SolveReport:
    """Minimize the worst-case value over every candidate decision.

    Candidates whose inner problem is infeasible are excluded; for
    mean-variance sets this includes candidates where no feasible starting
    distribution could be found.  Ties go to
    the first candidate in enumeration order.
    """
    if aset is None:
        aset = build_discretized(spec, samples, instance.support)
    cands = instance.candidates()
    best, best_idx, n_infeasible = None, -1, 0
    for i, x in enumerate(cands):
        try:
            sol = inner_worst_case(instance, x, aset)
        except NoFeasibleStart:
            sol = _INFEASIBLE
        if not sol.feasible:
            n_infeasible += 1
            continue
        if best is None or sol.value < best.value:
            best, best_idx = sol, i
    if best is None:
        raise AllCandidatesInfeasible(f"all {len(cands)} candidates are infeasible")

    gap = beta = None
    if instance.lipschitz.complete():
        beta = covering_radius(instance.support, samples, grid_per_dim)
        try:
            gap = theoretical_gap_bound(instance, spec, instance.support, beta)
        except NonPositiveAlpha:
            gap = None
    return SolveReport(best.value, cands[best_idx].copy(), best_idx, best, len(cands),
                       n_infeasible, gap, beta)


def reference_samples(support: SupportBox, fine_count: int, seed: int,
                      pool_factor: int = 4) -> SampleSet:
    return quantize_greedy(support, fine_count, pool_factor * fine_count, seed)


def reference_value(instance: ProblemInstance, spec: AmbiguitySpec, fine_count: int,
                    seed: int, pool_factor: int = 4) -> float:
    """Optimal value of the sampled model on a fine greedy quantizer."""
    if fine_count < 1024:
        raise ValueError("fine_count must be at least 1024")
    samples = reference_samples(instance.support, fine_count, seed, pool_factor)
    return solve_sampled_model(instance, spec, samples).v_hat
