"""Ambiguity-set specifications and their discretization on a sample set.

A discretized set is a linear system over decision variables ``z``.  For the
simplex, moment-box and mean-variance modes ``z`` is the probability vector
``p`` itself.  A Wasserstein ball is lifted: ``z`` is a transport plan from
the sample points to the nominal atoms and ``p`` is its row sums, which is
recorded by ``atom_index`` (variable -> sample point).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (DimensionMismatch, InfeasibleAnchor, NominalOutsideSupport,
                     NonPositiveAlpha)
from .geometry import SampleSet, SupportBox
from .lp import LpProblem, LpStatus, solve_lp
from .metrics import DiscreteDistribution, wasserstein_n

MEMBER_TOL = 1e-9


class AmbiguityMode(str, enum.Enum):
    SIMPLEX = "SimplexOnly"
    MOMENT_BOX = "MomentBox"
    MEAN_VARIANCE = "MeanVariance"
    WASSERSTEIN = "WassersteinBall"


def _vec(v, d=None):
    if v is None:
        return None
    arr = np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)
    if d is not None and arr.size == 1:
        arr = np.full(d, arr[0])
    return arr


@dataclass(frozen=True)
class AmbiguitySpec:
    """Declarative description of an ambiguity set.

    MomentBox
        ``E[psi(xi)] >= 0`` componentwise with affine
        ``psi(xi) = psi_matrix @ xi + psi_offset``; when ``mu0`` is given the
        rows ``mu0 - gamma_R <= E[xi] <= mu0 + gamma_L`` are added.
    MeanVariance
        The same mean rows plus ``Cov(P) <= gamma_s * sigma0`` in the
        semidefinite order.
    WassersteinBall
        ``W_order(P, nominal) <= radius``.
    """

    mode: AmbiguityMode
    mu0: np.ndarray | None = None
    gamma_L: float | np.ndarray | None = None
    gamma_R: float | np.ndarray | None = None
    psi_matrix: np.ndarray | None = None
    psi_offset: np.ndarray | None = None
    sigma0: np.ndarray | None = None
    gamma_s: float | None = None
    nominal: DiscreteDistribution | None = None
    radius: float | None = None
    order: int = 1

    def __post_init__(self):
        mode = AmbiguityMode(self.mode)
        object.__setattr__(self, "mode", mode)
        mu0 = _vec(self.mu0)
        object.__setattr__(self, "mu0", mu0)
        if mu0 is not None:
            gl = _vec(self.gamma_L if self.gamma_L is not None else 0.0, mu0.size)
            gr = _vec(self.gamma_R if self.gamma_R is not None else 0.0, mu0.size)
            if gl.size != mu0.size or gr.size != mu0.size:
                raise ValueError("gamma_L/gamma_R must be scalars or match mu0")
            if np.any(gl < 0) or np.any(gr < 0):
                raise ValueError("gamma_L and gamma_R must be nonnegative")
            object.__setattr__(self, "gamma_L", gl)
            object.__setattr__(self, "gamma_R", gr)
        if self.psi_matrix is not None:
            a = np.atleast_2d(np.asarray(self.psi_matrix, dtype=float))
            b = _vec(self.psi_offset if self.psi_offset is not None else np.zeros(a.shape[0]))
            if b.size != a.shape[0]:
                raise ValueError("psi_offset must have one entry per psi row")
            object.__setattr__(self, "psi_matrix", a)
            object.__setattr__(self, "psi_offset", b)

        if mode is AmbiguityMode.MEAN_VARIANCE:
            if mu0 is None or self.sigma0 is None or self.gamma_s is None:
                raise ValueError("MeanVariance needs mu0, sigma0 and gamma_s")
            s = np.atleast_2d(np.asarray(self.sigma0, dtype=float))
            if s.shape != (mu0.size, mu0.size) or not np.allclose(s, s.T):
                raise ValueError("sigma0 must be a symmetric d x d matrix")
            if np.linalg.eigvalsh(s)[0] <= 0:
                raise ValueError("sigma0 must be positive definite")
            if not self.gamma_s > 1:
                raise ValueError("gamma_s must exceed 1")
            object.__setattr__(self, "sigma0", s)
            object.__setattr__(self, "gamma_s", float(self.gamma_s))
        elif mode is AmbiguityMode.WASSERSTEIN:
            if self.nominal is None or self.radius is None:
                raise ValueError("WassersteinBall needs a nominal distribution and a radius")
            if self.radius < 0:
                raise ValueError("radius must be nonnegative")
            if int(self.order) < 1:
                raise ValueError("order must be at least 1")
            object.__setattr__(self, "radius", float(self.radius))
            object.__setattr__(self, "order", int(self.order))
        elif mode is AmbiguityMode.MOMENT_BOX:
            if mu0 is None and self.psi_matrix is None:
                raise ValueError("MomentBox needs mean bounds or psi rows")

    # constructors -------------------------------------------------------

    @classmethod
    def simplex(cls) -> "AmbiguitySpec":
        return cls(AmbiguityMode.SIMPLEX)

    @classmethod
    def moment_box(cls, mu0=None, gamma_L=None, gamma_R=None, psi_matrix=None,
                   psi_offset=None) -> "AmbiguitySpec":
        return cls(AmbiguityMode.MOMENT_BOX, mu0=mu0, gamma_L=gamma_L, gamma_R=gamma_R,
                   psi_matrix=psi_matrix, psi_offset=psi_offset)

    @classmethod
    def mean_variance(cls, mu0, sigma0, gamma_L, gamma_R, gamma_s) -> "AmbiguitySpec":
        return cls(AmbiguityMode.MEAN_VARIANCE, mu0=mu0, sigma0=sigma0,
                   gamma_L=gamma_L, gamma_R=gamma_R, gamma_s=gamma_s)

    @classmethod
    def wasserstein(cls, nominal: DiscreteDistribution, radius: float, order: int = 1) -> "AmbiguitySpec":
        return cls(AmbiguityMode.WASSERSTEIN, nominal=nominal, radius=radius, order=order)

    def with_radius(self, radius: float) -> "AmbiguitySpec":
        return AmbiguitySpec.wasserstein(self.nominal, radius, self.order)

    # moment map ---------------------------------------------------------

    def psi_rows(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Stacked affine map ``(A, b)`` with the cone condition ``E[A xi + b] >= 0``."""
        mats, offs = [], []
        if self.mu0 is not None:
            if self.mu0.size != d:
                raise DimensionMismatch(f"mu0 has length {self.mu0.size}, samples have d={d}")
            mats += [np.eye(d), -np.eye(d)]
            offs += [-(self.mu0 - self.gamma_R), self.mu0 + self.gamma_L]
        if self.psi_matrix is not None:
            if self.psi_matrix.shape[1] != d:
                raise DimensionMismatch("psi_matrix column count differs from d")
            mats.append(self.psi_matrix)
            offs.append(self.psi_offset)
        if not mats:
            return np.zeros((0, d)), np.zeros(0)
        return np.vstack(mats), np.concatenate(offs)

    # JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode.value}
        m = self.mode
        if m in (AmbiguityMode.MOMENT_BOX, AmbiguityMode.MEAN_VARIANCE) and self.mu0 is not None:
            out["mu0"] = self.mu0.tolist()
            out["gamma_L"] = self.gamma_L.tolist()
            out["gamma_R"] = self.gamma_R.tolist()
        if m is AmbiguityMode.MOMENT_BOX and self.psi_matrix is not None:
            out["psi_matrix"] = self.psi_matrix.tolist()
            out["psi_offset"] = self.psi_offset.tolist()
        if m is AmbiguityMode.MEAN_VARIANCE:
            out["sigma0"] = self.sigma0.tolist()
            out["gamma_s"] = self.gamma_s
        if m is AmbiguityMode.WASSERSTEIN:
            out["nominal"] = {"atoms": self.nominal.atoms.tolist(),
                              "weights": self.nominal.weights.tolist()}
            out["radius"] = self.radius
            out["order"] = self.order
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AmbiguitySpec":
        allowed = {
            AmbiguityMode.SIMPLEX: set(),
            AmbiguityMode.MOMENT_BOX: {"mu0", "gamma_L", "gamma_R", "psi_matrix", "psi_offset"},
            AmbiguityMode.MEAN_VARIANCE: {"mu0", "gamma_L", "gamma_R", "sigma0", "gamma_s"},
            AmbiguityMode.WASSERSTEIN: {"nominal", "radius", "order"},
        }
        if not isinstance(obj, dict) or "mode" not in obj:
            raise ValueError("ambiguity spec must be an object with a 'mode' key")
        mode = AmbiguityMode(obj["mode"])
        extra = set(obj) - {"mode"} - allowed[mode]
        if extra:
            raise ValueError(f"unknown keys for {mode.value}: {sorted(extra)}")
        kw = {k: v for k, v in obj.items() if k != "mode"}
        if "nominal" in kw:
            nom = kw["nominal"]
            kw["nominal"] = DiscreteDistribution(np.asarray(nom["atoms"], dtype=float),
                                                 np.asarray(nom["weights"], dtype=float))
        return cls(mode, **kw)


@dataclass(frozen=True)
class DiscretizedAmbiguitySet:
    """Members of an ambiguity set carried by a fixed sample set."""

    spec: AmbiguitySpec
    samples: SampleSet
    atom_index: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ub_matrix: np.ndarray
    ub_rhs: np.ndarray
    is_linear: bool = True
    lifted: bool = False
    cost: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_vars(self) -> int:
        return self.atom_index.size

    @property
    def size(self) -> int:
        return len(self.samples)

    def p_from_z(self, z) -> np.ndarray:
        if not self.lifted:
            return np.asarray(z, dtype=float).copy()
        return np.bincount(self.atom_index, weights=z, minlength=self.size)

    def p_operator(self) -> np.ndarray:
        op = np.zeros((self.size, self.n_vars))
        op[self.atom_index, np.arange(self.n_vars)] = 1.0
        return op

    def lift(self, rows_p: np.ndarray) -> np.ndarray:
        """Express constraints on ``p`` as constraints on ``z``."""
        return np.atleast_2d(rows_p)[:, self.atom_index]

    def problem(self, objective_p, extra_ub=None, extra_rhs=None) -> LpProblem:
        ub, rhs = self.ub_matrix, self.ub_rhs
        if extra_ub is not None and len(extra_rhs):
            ub = np.vstack([ub, self.lift(extra_ub)])
            rhs = np.concatenate([rhs, extra_rhs])
        return LpProblem(objective=np.asarray(objective_p, dtype=float)[self.atom_index],
                         eq_matrix=self.eq_matrix, eq_rhs=self.eq_rhs,
                         ub_matrix=ub, ub_rhs=rhs)

    def maximize(self, objective_p) -> np.ndarray | None:
        """A maximizer ``z`` of ``objective_p @ p`` over the linear rows, or None."""
        sol = solve_lp(self.problem(objective_p))
        return sol.point if sol.status is LpStatus.OPTIMAL else None


def _simplex_rows(n: int):
    return np.ones((1, n)), np.ones(1)


def build_discretized(spec: AmbiguitySpec, samples: SampleSet,
                      support: SupportBox | None = None) -> DiscretizedAmbiguitySet:
    """Constraint system of ``spec`` restricted to distributions on ``samples``.

    For MeanVariance only the linear rows are stored; the covariance bound
    is checked by :func:`membership` and handled by the mean-variance inner
    solver.
    """
    pts = samples.points
    n, d = pts.shape
    mode = spec.mode
    if mode is AmbiguityMode.WASSERSTEIN:
        nom = spec.nominal
        if nom.dim != d:
            raise DimensionMismatch("nominal atoms and samples differ in dimension")
        if support is not None and not nom.inside(support):
            raise NominalOutsideSupport("nominal atoms must lie in the support")
        k = len(nom)
        cost = cdist(pts, nom.atoms) ** spec.order
        # z[w * k + j] is the mass moved from sample w to nominal atom j
        eq = np.kron(np.ones((1, n)), np.eye(k))
        return DiscretizedAmbiguitySet(
            spec, samples, np.repeat(np.arange(n), k),
            eq, nom.weights.copy(),
            cost.reshape(1, -1), np.array([spec.radius ** spec.order]),
            is_linear=True, lifted=True, cost=cost,
        )

    eq, eq_rhs = _simplex_rows(n)
    ub, ub_rhs = np.zeros((0, n)), np.zeros(0)
    if mode in (AmbiguityMode.MOMENT_BOX, AmbiguityMode.MEAN_VARIANCE):
        a, b = spec.psi_rows(d)
        values = pts @ a.T + b          # psi(xi_w), one row per sample
        ub, ub_rhs = -values.T, np.zeros(a.shape[0])
    return DiscretizedAmbiguitySet(
        spec, samples, np.arange(n), eq, eq_rhs, ub, ub_rhs,
        is_linear=mode is not AmbiguityMode.MEAN_VARIANCE,
    )


def covariance_slack(spec: AmbiguitySpec, points: np.ndarray, p: np.ndarray) -> float:
    """Smallest eigenvalue of ``gamma_s * sigma0 - Cov(p)``."""
    mu = p @ points
    c = points - mu
    cov = (c * p[:, None]).T @ c
    return float(np.linalg.eigvalsh(spec.gamma_s * spec.sigma0 - cov)[0])


def membership(aset: DiscretizedAmbiguitySet, p) -> tuple[bool, float]:
    """Whether ``p`` lies in the set, and the smallest constraint slack."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != aset.size:
        raise DimensionMismatch(f"p has length {p.size}, set has {aset.size} points")
    sum_err = abs(p.sum() - 1.0)
    min_p = float(p.min())
    spec = aset.spec
    if sum_err > MEMBER_TOL or min_p < -MEMBER_TOL:
        margin = min(min_p, -sum_err)
        return False, margin

    if spec.mode is AmbiguityMode.WASSERSTEIN:
        dist = DiscreteDistribution.from_weights(aset.samples.points, np.maximum(p, 0.0))
        w = wasserstein_n(dist.support_only(), spec.nominal, spec.order)
        margin = spec.radius - w
    else:
        margin = min_p
        if aset.ub_rhs.size:
            margin = min(margin, float(np.min(aset.ub_rhs - aset.ub_matrix @ p)))
        if spec.mode is AmbiguityMode.MEAN_VARIANCE:
            margin = min(margin, covariance_slack(spec, aset.samples.points, p))
    return margin >= -MEMBER_TOL, float(margin)


def slater_margin(aset: DiscretizedAmbiguitySet, p0) -> float:
    """Radius of the largest box-cone ball around ``E_p0[psi]``.

    This is the smallest moment-row slack at ``p0``.
    """
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    if p0.size != aset.size:
        raise DimensionMismatch("anchor has the wrong length")
    if abs(p0.sum() - 1.0) > MEMBER_TOL or p0.min() < -MEMBER_TOL:
        raise InfeasibleAnchor("anchor is not a probability vector")
    a, b = aset.spec.psi_rows(aset.samples.dim)
    if a.shape[0] == 0:
        raise ValueError("set has no moment rows")
    slack = float(np.min(p0 @ (aset.samples.points @ a.T + b)))
    if slack < -MEMBER_TOL:
        raise InfeasibleAnchor(f"anchor violates a moment row by {-slack:g}")
    return max(slack, 0.0)


def moment_ch(kappa_psi: float, ones_norm: float, m_xi: float, alpha: float) -> float:
    """``1 + 2 kappa_psi ||1|| M / alpha`` for moment sets with a Slater margin."""
    if not alpha > 0:
        raise NonPositiveAlpha("alpha must be positive")
    return 1.0 + 2.0 * kappa_psi * ones_norm * m_xi / alpha


def moment_alpha(spec: AmbiguitySpec, support: SupportBox) -> float:
    """Largest Slater margin of a moment set over distributions on the support.

    ``psi`` is affine, so ``E_P[psi] = psi(E_P[xi])`` and the mean ranges
    over the whole box; the margin is ``max_xi min_i (A xi + b)_i``.
    """
    a, b = spec.psi_rows(support.dim)
    if a.shape[0] == 0:
        raise NonPositiveAlpha("set has no moment rows")
    d = support.dim
    floor = float(np.max(np.abs(b)) + np.max(np.abs(a).sum(axis=1)) * support.m_xi + 1.0)
    # variables (xi, t); maximize t subject to t <= A xi + b and xi within the box
    sol = solve_lp(LpProblem(
        objective=np.concatenate([np.zeros(d), [1.0]]),
        ub_matrix=np.vstack([np.hstack([-a, np.ones((a.shape[0], 1))]),
                             np.hstack([np.eye(d), np.zeros((d, 1))])]),
        ub_rhs=np.concatenate([b, support.upper]),
        lower=np.concatenate([support.lower, [-floor]]),
    ))
    if sol.status is not LpStatus.OPTIMAL or not sol.value > 0:
        raise NonPositiveAlpha("moment set has no Slater point on the support")
    return float(sol.value)


def mean_variance_alpha(spec: AmbiguitySpec) -> float:
    lam = float(np.linalg.eigvalsh(spec.sigma0)[0])
    return float(min(np.min(spec.gamma_L), np.min(spec.gamma_R), (spec.gamma_s - 1.0) * lam))


def theoretical_CH(spec: AmbiguitySpec, support: SupportBox, alpha: float | None = None,
                   kappa_psi: float | None = None, ones_norm: float | None = None) -> float:
    """Constant ``C`` with ``H(P_n, P) <= C * beta`` for the supported modes.

    SimplexOnly returns 1: the nearest-atom projection of any distribution
    is within the covering radius, and the discretized set is a subset.
    """
    m = spec.mode
    if m is AmbiguityMode.WASSERSTEIN:
        return 2.0
    if m is AmbiguityMode.SIMPLEX:
        return 1.0
    if m is AmbiguityMode.MEAN_VARIANCE:
        d = spec.mu0.size
        if alpha is None:
            alpha = mean_variance_alpha(spec)
        if not alpha > 0:
            raise NonPositiveAlpha("alpha must be positive")
        m_xi = support.m_xi
        return 1.0 + 2.0 * math.sqrt(2.0 + 16.0 * m_xi ** 2) * m_xi * math.sqrt(d * d + 2 * d) / alpha
    if alpha is None:
        alpha = moment_alpha(spec, support)
    a, _ = spec.psi_rows(support.dim)
    if kappa_psi is None:
        kappa_psi = float(np.linalg.norm(a, 2))
    if ones_norm is None:
        ones_norm = math.sqrt(a.shape[0])
    return moment_ch(kappa_psi, ones_norm, support.m_xi, alpha)
