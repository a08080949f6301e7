"""Dense two-phase simplex solver.

Every LP in the package (transport plans, ambiguity-set membership, inner
worst-case problems) is small and dense, so a tableau method with Bland's
anti-cycling rule is used throughout.  Problems are stated as::

    maximize    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                x >= lower
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedProblem, SolverError

TOL = 1e-9


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _as_matrix(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, ncols)
    if a.ndim != 2:
        raise MalformedProblem(f"{name} must be two-dimensional")
    if a.shape[1] != ncols:
        raise MalformedProblem(
            f"{name} has {a.shape[1]} columns, objective has {ncols} entries"
        )
    return a


def _as_vector(v, size: int, name: str) -> np.ndarray:
    if v is None:
        return np.zeros(size)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != size:
        raise MalformedProblem(f"{name} has length {v.size}, expected {size}")
    return v


@dataclass(frozen=True)
class LpProblem:
    """Maximization LP in inequality/equality form with lower bounds."""

    objective: np.ndarray
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ub_matrix: np.ndarray | None = None
    ub_rhs: np.ndarray | None = None
    lower: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        a_eq = _as_matrix(self.eq_matrix, n, "eq_matrix")
        a_ub = _as_matrix(self.ub_matrix, n, "ub_matrix")
        b_eq = _as_vector(self.eq_rhs, a_eq.shape[0], "eq_rhs")
        b_ub = _as_vector(self.ub_rhs, a_ub.shape[0], "ub_rhs")
        lo = _as_vector(self.lower, n, "lower")
        for name, arr in (("objective", c), ("eq_matrix", a_eq), ("eq_rhs", b_eq),
                          ("ub_matrix", a_ub), ("ub_rhs", b_ub), ("lower", lo)):
            if not np.all(np.isfinite(arr)):
                raise MalformedProblem(f"{name} contains non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", a_eq)
        object.__setattr__(self, "eq_rhs", b_eq)
        object.__setattr__(self, "ub_matrix", a_ub)
        object.__setattr__(self, "ub_rhs", b_ub)
        object.__setattr__(self, "lower", lo)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.eq_rhs.size:
            worst = max(worst, float(np.max(np.abs(self.eq_matrix @ x - self.eq_rhs))))
        if self.ub_rhs.size:
            worst = max(worst, float(np.max(self.ub_matrix @ x - self.ub_rhs)))
        if x.size:
            worst = max(worst, float(np.max(self.lower - x)))
        return worst


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float
    point: np.ndarray
    iterations: int
    infeasibility: float = 0.0
    basis: np.ndarray = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[r, j] = 1.0


def _run_simplex(T, basis, ncols, tol, max_iter, it):
    """Bland-rule primal simplex on tableau ``T`` (last row = z_j - c_j)."""
    m = T.shape[0] - 1
    while True:
        if it >= max_iter:
            raise SolverError(f"simplex exceeded {max_iter} iterations")
        row = T[m, :ncols]
        entering = np.flatnonzero(row < -tol)
        if entering.size == 0:
            return LpStatus.OPTIMAL, it
        j = int(entering[0])
        col = T[:m, j]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            return LpStatus.UNBOUNDED, it
        ratios = T[pos, -1] / col[pos]
        rmin = ratios.min()
        ties = pos[ratios <= rmin + 1e-12 * (1.0 + abs(rmin))]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, r, j)
        basis[r] = j
        rhs = T[:m, -1]
        rhs[rhs < 0.0] = 0.0
        it += 1


def solve_lp(problem: LpProblem, tol: float = TOL, max_iter: int | None = None) -> LpSolution:
    """Solve ``problem`` with the two-phase simplex method.

    Raises
    ------
    MalformedProblem
        Propagated from :class:`LpProblem` construction.
    SolverError
        If the iteration cap is reached.
    """
    if not isinstance(problem, LpProblem):
        raise MalformedProblem("solve_lp expects an LpProblem")
    c, lo = problem.objective, problem.lower
    n = c.size
    a_eq, a_ub = problem.eq_matrix, problem.ub_matrix
    b_eq = problem.eq_rhs - a_eq @ lo
    b_ub = problem.ub_rhs - a_ub @ lo
    m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
    m = m_eq + m_ub
    n_struct = n + m_ub
    if max_iter is None:
        max_iter = 50 * (m + n_struct) + 1000

    if m == 0:
        if np.any(c > tol):
            return LpSolution(LpStatus.UNBOUNDED, np.inf, lo.copy(), 0)
        return LpSolution(LpStatus.OPTIMAL, float(c @ lo), lo.copy(), 0)

    A = np.zeros((m, n_struct))
    A[:m_eq, :n] = a_eq
    A[m_eq:, :n] = a_ub
    A[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    basis = np.full(m, -1, dtype=int)
    ub_rows = np.arange(m_eq, m)
    keep_slack = ub_rows[~flip[m_eq:]]
    basis[keep_slack] = n + (keep_slack - m_eq)
    need = np.flatnonzero(basis < 0)
    n_art = need.size

    T = np.zeros((m + 1, n_struct + n_art + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    T[need, n_struct + np.arange(n_art)] = 1.0
    basis[need] = n_struct + np.arange(n_art)

    it = 0
    infeas = 0.0
    feas_tol = tol * max(1.0, float(np.max(np.abs(b))))
    if n_art:
        # phase 1: maximize -sum(artificials)
        T[m, :] = -T[need].sum(axis=0)
        T[m, n_struct:n_struct + n_art] = 0.0
        status, it = _run_simplex(T, basis, n_struct + n_art, tol, max_iter, it)
        infeas = abs(float(T[m, -1]))
        if infeas > feas_tol:
            y = np.zeros(n_struct + n_art)
            y[basis] = T[:m, -1]
            return LpSolution(LpStatus.INFEASIBLE, np.nan, lo + y[:n], it, infeas)
        # drive remaining artificials out of the basis
        redundant = []
        for i in range(m):
            if basis[i] >= n_struct:
                cand = np.flatnonzero(np.abs(T[i, :n_struct]) > tol)
                if cand.size:
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
                else:
                    redundant.append(i)
        if redundant:
            keep = np.setdiff1d(np.arange(m), redundant)
            T = np.vstack([T[keep], T[m:m + 1]])
            basis = basis[keep]
            A = A[keep]
            b = b[keep]
            m = keep.size
        T = np.delete(T, np.s_[n_struct:n_struct + n_art], axis=1)

    cost = np.zeros(n_struct)
    cost[:n] = c
    T[m, :n_struct] = cost[basis] @ T[:m, :n_struct] - cost
    T[m, -1] = cost[basis] @ T[:m, -1]
    status, it = _run_simplex(T, basis, n_struct, tol, max_iter, it)

    y = np.zeros(n_struct)
    y[basis] = T[:m, -1]
    if m:
        # recompute the basic solution from the original data
        try:
            yb = np.linalg.solve(A[:, basis], b)
            if np.all(yb >= -feas_tol) and np.allclose(yb, y[basis], atol=1e-6, rtol=1e-6):
                y[basis] = np.maximum(yb, 0.0)
        except np.linalg.LinAlgError:
            pass
    x = lo + y[:n]
    if status is LpStatus.UNBOUNDED:
        return LpSolution(status, np.inf, x, it, infeas, basis.copy())
    return LpSolution(status, float(c @ x), x, it, infeas, basis.copy())
