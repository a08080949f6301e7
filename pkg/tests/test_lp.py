import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drocc.errors import MalformedProblem
from drocc.lp import LpProblem, LpStatus, solve_lp


def enumerate_vertex_optimum(c, a_ub, b_ub):
    """Best objective over all basic feasible points of {A x <= b, x >= 0}."""
    n = c.size
    rows = np.vstack([a_ub, -np.eye(n)])
    rhs = np.concatenate([b_ub, np.zeros(n)])
    best = -np.inf
    for active in itertools.combinations(range(rows.shape[0]), n):
        sub = rows[list(active)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, rhs[list(active)])
        if np.all(rows @ x <= rhs + 1e-9):
            best = max(best, float(c @ x))
    return best


def test_single_bound():
    sol = solve_lp(LpProblem(objective=[1.0], ub_matrix=[[1.0]], ub_rhs=[1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(sol.point, [1.0])


def test_constant_objective_on_equality():
    sol = solve_lp(LpProblem(objective=[1.0, 1.0], eq_matrix=[[1.0, 1.0]], eq_rhs=[1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(1.0, abs=1e-12)


def test_infeasible():
    sol = solve_lp(LpProblem(objective=[1.0], ub_matrix=[[-1.0], [1.0]], ub_rhs=[-2.0, 1.0]))
    assert sol.status is LpStatus.INFEASIBLE
    assert sol.infeasibility > 1e-9


def test_unbounded():
    sol = solve_lp(LpProblem(objective=[1.0, 0.0], ub_matrix=[[0.0, 1.0]], ub_rhs=[1.0]))
    assert sol.status is LpStatus.UNBOUNDED


def test_lower_bounds_shift():
    # maximize -x s.t. x >= -3 -> x = -3
    sol = solve_lp(LpProblem(objective=[-1.0], lower=[-3.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(3.0)


def test_redundant_equalities():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    sol = solve_lp(LpProblem(objective=[1.0, 2.0, 0.0], eq_matrix=a, eq_rhs=[0.5, 0.5, 1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(1.0)


@pytest.mark.parametrize("kwargs", [
    dict(objective=[1.0, 2.0], ub_matrix=[[1.0, 1.0, 1.0]], ub_rhs=[1.0]),
    dict(objective=[1.0], eq_matrix=[[1.0]], eq_rhs=[1.0, 2.0]),
    dict(objective=[np.nan]),
    dict(objective=[1.0], ub_matrix=[[np.inf]], ub_rhs=[1.0]),
])
def test_malformed(kwargs):
    with pytest.raises(MalformedProblem):
        LpProblem(**kwargs)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), m=st.integers(1, 5))
def test_matches_vertex_enumeration(seed, n, m):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(m, n))
    # a box row keeps the problem bounded; b >= 0 keeps it feasible
    a = np.vstack([a, np.ones((1, n))])
    b = np.concatenate([rng.uniform(0, 2, size=m), [3.0]])
    c = rng.normal(size=n)
    problem = LpProblem(objective=c, ub_matrix=a, ub_rhs=b)
    sol = solve_lp(problem)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.value == pytest.approx(enumerate_vertex_optimum(c, a, b), abs=1e-7)
    assert problem.max_violation(sol.point) <= 1e-9
    assert sol.value == pytest.approx(float(c @ sol.point), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_degenerate_transport_feasibility(seed):
    rng = np.random.default_rng(seed)
    k1, k2 = rng.integers(2, 6, size=2)
    p = rng.dirichlet(np.ones(k1))
    q = rng.dirichlet(np.ones(k2))
    cost = rng.uniform(size=(k1, k2))
    rows = np.kron(np.eye(k1), np.ones(k2))
    cols = np.kron(np.ones(k1), np.eye(k2))
    problem = LpProblem(objective=-cost.ravel(), eq_matrix=np.vstack([rows, cols]),
                        eq_rhs=np.concatenate([p, q]))
    sol = solve_lp(problem)
    assert sol.status is LpStatus.OPTIMAL
    assert problem.max_violation(sol.point) <= 1e-9


def test_deterministic():
    rng = np.random.default_rng(3)
    a = rng.uniform(size=(6, 8))
    problem = LpProblem(objective=rng.normal(size=8), ub_matrix=a, ub_rhs=np.ones(6))
    s1, s2 = solve_lp(problem), solve_lp(problem)
    assert s1.value == s2.value
    assert np.array_equal(s1.point, s2.point)
