"""Problem instances and the discrete chance constraint."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, EvaluationError
from .geometry import SampleSet, SupportBox

# Evaluators are vectorized over samples: (x, points[n, d]) -> array[n] or array[n, m].
Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LipschitzConstants:
    kappa_F: float | None = None
    kappa_G: float | None = None
    kappa_theta: float | None = None
    C_P: float | None = None

    def complete(self) -> bool:
        return None not in (self.kappa_F, self.kappa_G, self.kappa_theta, self.C_P)


@dataclass(frozen=True)
class FiniteCandidates:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] == 0:
            raise ValueError("decision domain is empty")
        object.__setattr__(self, "points", pts)

    def candidates(self) -> np.ndarray:
        return self.points


@dataclass(frozen=True)
class GridBox:
    lower: np.ndarray
    upper: np.ndarray
    steps: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        st = np.atleast_1d(np.asarray(self.steps, dtype=int))
        if st.size == 1:
            st = np.full(lo.size, st[0])
        if not (lo.shape == hi.shape == st.shape) or np.any(st < 1) or np.any(lo > hi):
            raise ValueError("GridBox needs matching lower/upper/steps with steps >= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "steps", st)

    def candidates(self) -> np.ndarray:
        axes = [np.linspace(a, b, s) if s > 1 else np.array([a])
                for a, b, s in zip(self.lower, self.upper, self.steps)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class ProblemInstance:
    """Objective ``F``, constraint map ``G``, decision domain and safety level."""

    objective: Evaluator
    constraint: Evaluator
    decision_domain: FiniteCandidates | GridBox
    theta: float
    support: SupportBox
    lipschitz: LipschitzConstants = field(default_factory=LipschitzConstants)
    tau: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")

    def candidates(self) -> np.ndarray:
        return self.decision_domain.candidates()

    def with_theta(self, theta: float) -> "ProblemInstance":
        return replace(self, theta=theta)

    def with_lipschitz(self, **kw) -> "ProblemInstance":
        return replace(self, lipschitz=replace(self.lipschitz, **kw))

    def objective_values(self, x, points) -> np.ndarray:
        vals = np.asarray(self.objective(np.asarray(x, dtype=float), points), dtype=float)
        vals = vals.reshape(points.shape[0])
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("objective returned non-finite values")
        return vals


@dataclass(frozen=True)
class FeasibilityMask:
    bits: np.ndarray

    def __len__(self) -> int:
        return self.bits.size


def _points(samples) -> np.ndarray:
    return samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)


def feasible_mask(instance: ProblemInstance, x, samples) -> FeasibilityMask:
    """``bits[w]`` is true iff ``max_i G_i(x, xi_w) <= tau``."""
    pts = _points(samples)
    g = np.asarray(instance.constraint(np.asarray(x, dtype=float), pts), dtype=float)
    g = g.reshape(pts.shape[0], -1)
    if not np.all(np.isfinite(g)):
        raise EvaluationError("constraint map returned non-finite values")
    return FeasibilityMask(g.max(axis=1) <= instance.tau)


def chance_probability(mask: FeasibilityMask, p) -> float:
    """Probability of the feasible atoms under ``p``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != len(mask):
        raise DimensionMismatch(f"p has length {p.size}, mask has {len(mask)}")
    return float(p[mask.bits].sum())


def simplex_grid(n_assets: int, steps: int) -> np.ndarray:
    """Portfolios with weights in multiples of ``1/steps`` summing to one."""
    rows = []
    for combo in itertools.combinations_with_replacement(range(n_assets), steps):
        rows.append(np.bincount(combo, minlength=n_assets) / steps)
    return np.unique(np.array(rows), axis=0)[::-1]


def make_portfolio_instance(return_bounds, loss_threshold: float, theta: float,
                            steps: int = 10, kappa_theta: float | None = None,
                            C_P: float | None = None) -> ProblemInstance:
    """Worst-case portfolio return with a loss-exceedance chance constraint.

    ``return_bounds`` is an ``(n_assets, 2)`` array of per-asset return
    ranges; their product is the support.  ``F(x, xi) = -xi @ x`` and
    ``G(x, xi) = -xi @ x - loss_threshold``.
    """
    bounds = np.asarray(return_bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError("return_bounds must have shape (n_assets, 2)")
    support = SupportBox(bounds[:, 0], bounds[:, 1])
    grid = simplex_grid(bounds.shape[0], steps)
    k = float(np.max(np.linalg.norm(grid, axis=1)))

    def objective(x, pts):
        return -(pts @ x)

    def constraint(x, pts):
        return -(pts @ x) - loss_threshold

    return ProblemInstance(
        objective, constraint, FiniteCandidates(grid), theta, support,
        LipschitzConstants(kappa_F=k, kappa_G=k, kappa_theta=kappa_theta, C_P=C_P),
        name="portfolio",
    )


def make_synthetic_1d_instance(theta: float = 0.1, grid_points: int = 101,
                               kappa_theta: float | None = None,
                               C_P: float | None = None) -> ProblemInstance:
    """Reference instance on ``[0, 1]``: ``F = (x - xi)^2``, ``G = xi - x``.

    ``|dF/dxi| = 2|x - xi| <= 2 M`` with ``M = 1``, and ``G`` has unit slope.
    """

    def objective(x, pts):
        return (x[0] - pts[:, 0]) ** 2

    def constraint(x, pts):
        return pts[:, 0] - x[0]

    support = SupportBox.unit(1)
    return ProblemInstance(
        objective, constraint, GridBox([0.0], [1.0], [grid_points]), theta, support,
        LipschitzConstants(kappa_F=2.0 * support.m_xi, kappa_G=1.0,
                           kappa_theta=kappa_theta, C_P=C_P),
        name="synthetic1d",
    )
