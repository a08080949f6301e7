"""Transport distances between discrete distributions and ambiguity sets."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmptySampleSet, InfeasibleSet, NonLinearSet
from .geometry import SampleSet, SupportBox
from .lp import LpProblem, LpStatus, solve_lp

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution; zero weights are allowed."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != w.size or w.size == 0:
            raise ValueError("atoms and weights must have the same nonzero length")
        if not np.all(np.isfinite(atoms)) or not np.all(np.isfinite(w)):
            raise ValueError("atoms and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        if np.unique(atoms, axis=0).shape[0] != atoms.shape[0]:
            raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, atoms, weights, clip: float = 1e-13) -> "DiscreteDistribution":
        """Build from nearly-valid weights (LP output): clip and renormalize."""
        w = np.asarray(weights, dtype=float).copy()
        w[w < clip] = 0.0
        return cls(atoms, w / w.sum())

    @classmethod
    def point_mass(cls, atom) -> "DiscreteDistribution":
        return cls(np.atleast_1d(np.asarray(atom, dtype=float)).reshape(1, -1), [1.0])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def covariance(self) -> np.ndarray:
        centered = self.atoms - self.mean()
        return (centered * self.weights[:, None]).T @ centered

    def support_only(self) -> "DiscreteDistribution":
        keep = self.weights > 0
        return DiscreteDistribution(self.atoms[keep], self.weights[keep] / self.weights[keep].sum())

    def inside(self, support: SupportBox) -> bool:
        return support.contains(self.atoms)


def mixture(parts, coefficients) -> DiscreteDistribution:
    """``sum_k coefficients[k] * parts[k]``; coincident atoms are merged."""
    atoms = np.vstack([p.atoms for p in parts])
    weights = np.concatenate([c * p.weights for p, c in zip(parts, coefficients)])
    uniq, inverse = np.unique(atoms, axis=0, return_inverse=True)
    merged = np.bincount(inverse.reshape(-1), weights=weights, minlength=uniq.shape[0])
    return DiscreteDistribution(uniq, merged / merged.sum())


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray
    cost: float
    order: int


def transport_constraints(k1: int, k2: int):
    """Row-sum and column-sum operators for a row-major ``k1 x k2`` plan."""
    rows = np.kron(np.eye(k1), np.ones((1, k2)))
    cols = np.kron(np.ones((1, k1)), np.eye(k2))
    return rows, cols


def _transport(p: DiscreteDistribution, q: DiscreteDistribution, order: int) -> TransportPlan:
    if p.dim != q.dim:
        raise ValueError("distributions live in different dimensions")
    cost = cdist(p.atoms, q.atoms) ** order
    k1, k2 = cost.shape
    rows, cols = transport_constraints(k1, k2)
    # the last column-sum row is implied by the others
    problem = LpProblem(
        objective=-cost.ravel(),
        eq_matrix=np.vstack([rows, cols[:-1]]),
        eq_rhs=np.concatenate([p.weights, q.weights[:-1]]),
    )
    sol = solve_lp(problem)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"transport LP ended with status {sol.status.value}")
    plan = sol.point.reshape(k1, k2)
    return TransportPlan(plan, float(np.sum(plan * cost)), order)


def kantorovich(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple[float, TransportPlan]:
    """Kantorovich (first-order Wasserstein) distance and an optimal plan."""
    plan = _transport(p, q, 1)
    return max(plan.cost, 0.0), plan


def wasserstein_n(p: DiscreteDistribution, q: DiscreteDistribution, n: int) -> float:
    """Order-``n`` Wasserstein distance ``(min sum pi_ij ||a_i - b_j||^n)^(1/n)``."""
    if n < 1:
        raise ValueError("order must be at least 1")
    return max(_transport(p, q, n).cost, 0.0) ** (1.0 / n)


class ProjectionMode(str, enum.Enum):
    NEAREST_ATOM = "NearestAtom"
    EXACT_LP = "ExactLP"


def project_to_support(p: DiscreteDistribution, samples: SampleSet,
                       mode: ProjectionMode | str = ProjectionMode.NEAREST_ATOM) -> DiscreteDistribution:
    """Move ``p`` onto the sample points.

    ``NearestAtom`` sends each atom's mass to its closest sample point.
    ``ExactLP`` minimizes the Kantorovich distance to ``p`` over every
    distribution carried by the sample points.  Zero-weight sample points
    are dropped from the result.
    """
    mode = ProjectionMode(mode)
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    if pts.shape[0] == 0:
        raise EmptySampleSet("cannot project onto an empty sample set")
    dist = cdist(p.atoms, pts)
    if mode is ProjectionMode.NEAREST_ATOM:
        target = np.argmin(dist, axis=1)
        w = np.bincount(target, weights=p.weights, minlength=pts.shape[0])
    else:
        k1, k2 = dist.shape
        rows, _ = transport_constraints(k1, k2)
        sol = solve_lp(LpProblem(objective=-dist.ravel(), eq_matrix=rows, eq_rhs=p.weights))
        w = sol.point.reshape(k1, k2).sum(axis=0)
    return DiscreteDistribution.from_weights(pts, w).support_only()


def _require_linear(s) -> None:
    if not s.is_linear:
        raise NonLinearSet("mean-variance sets have no linear description")


def distance_to_set(q: DiscreteDistribution, ambiguity_set) -> float:
    """``min_{p in set} rho(q, p)`` as a single LP.

    Variables are a plan from ``q``'s atoms to the set's sample points
    together with the set's own variables; the plan's column sums must
    equal the member distribution ``p``.
    """
    _require_linear(ambiguity_set)
    s = ambiguity_set
    pts = s.samples.points
    dist = cdist(q.atoms, pts)
    k1, k2 = dist.shape
    nz = s.n_vars
    rows, cols = transport_constraints(k1, k2)
    p_of_z = s.p_operator()
    eq = [np.hstack([rows, np.zeros((k1, nz))]),
          np.hstack([cols, -p_of_z])]
    rhs = [q.weights, np.zeros(k2)]
    if s.eq_rhs.size:
        eq.append(np.hstack([np.zeros((s.eq_rhs.size, k1 * k2)), s.eq_matrix]))
        rhs.append(s.eq_rhs)
    ub = np.hstack([np.zeros((s.ub_rhs.size, k1 * k2)), s.ub_matrix])
    sol = solve_lp(LpProblem(
        objective=np.concatenate([-dist.ravel(), np.zeros(nz)]),
        eq_matrix=np.vstack(eq), eq_rhs=np.concatenate(rhs),
        ub_matrix=ub, ub_rhs=s.ub_rhs,
    ))
    if sol.status is not LpStatus.OPTIMAL:
        raise InfeasibleSet("ambiguity set has no member")
    return max(-sol.value, 0.0)


def _exposed_vertices(s, directions: int, rng: np.random.Generator) -> list[np.ndarray]:
    found = []
    for _ in range(directions):
        c = rng.normal(size=len(s.samples))
        z = s.maximize(c)
        if z is None:
            raise InfeasibleSet("ambiguity set has no member")
        p = s.p_from_z(z)
        if not any(np.allclose(p, v, atol=1e-10) for v in found):
            found.append(p)
    return found


def enumerate_vertices(s) -> list[np.ndarray]:
    """All vertices of a non-lifted polyhedral set (small instances only)."""
    _require_linear(s)
    if s.lifted:
        raise ValueError("vertex enumeration needs a set described directly in p")
    n = s.n_vars
    a_eq, b_eq = s.eq_matrix, s.eq_rhs
    ineq = np.vstack([s.ub_matrix, -np.eye(n)])
    ineq_rhs = np.concatenate([s.ub_rhs, np.zeros(n)])
    need = n - a_eq.shape[0]
    verts: list[np.ndarray] = []
    for active in itertools.combinations(range(ineq.shape[0]), max(need, 0)):
        lhs = np.vstack([a_eq, ineq[list(active)]])
        rhs = np.concatenate([b_eq, ineq_rhs[list(active)]])
        if np.linalg.matrix_rank(lhs) < n:
            continue
        z = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        if np.max(np.abs(lhs @ z - rhs)) > 1e-9:
            continue
        if np.all(ineq @ z <= ineq_rhs + 1e-9) and np.all(np.abs(a_eq @ z - b_eq) <= 1e-9):
            if not any(np.allclose(z, v, atol=1e-10) for v in verts):
                verts.append(np.maximum(z, 0.0))
    return verts


def _directed(a, b, directions, rng, exhaustive) -> float:
    verts = enumerate_vertices(a) if exhaustive else _exposed_vertices(a, directions, rng)
    pts = a.samples.points
    worst = 0.0
    for p in verts:
        member = DiscreteDistribution.from_weights(pts, p).support_only()
        worst = max(worst, distance_to_set(member, b))
    return worst


def hausdorff_estimate(set_a, set_b, directions: int = 64, seed: int = 0,
                       exhaustive: bool = False) -> float:
    """Lower-bound estimate of the Hausdorff distance between two sets.

    Each directed distance ``sup_{p in A} d(p, B)`` is a maximum of a convex
    function over a polytope and is attained at a vertex.  Vertices are found
    by maximizing ``directions`` random linear objectives; with
    ``exhaustive=True`` every vertex is enumerated and the result is exact.
    """
    _require_linear(set_a)
    _require_linear(set_b)
    rng = np.random.default_rng(seed)
    return max(_directed(set_a, set_b, directions, rng, exhaustive),
               _directed(set_b, set_a, directions, rng, exhaustive))
