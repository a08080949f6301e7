import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog
from scipy.spatial.distance import cdist
from scipy.stats import wasserstein_distance

from drocc.ambiguity import AmbiguitySpec, build_discretized
from drocc.errors import EmptySampleSet, InfeasibleSet, NonLinearSet
from drocc.geometry import GenerationMode, SampleSet, SupportBox, covering_radius
from drocc.metrics import (DiscreteDistribution, ProjectionMode, distance_to_set,
                           enumerate_vertices, hausdorff_estimate, kantorovich, mixture,
                           project_to_support, wasserstein_n)


def dist(atoms, weights):
    return DiscreteDistribution(np.asarray(atoms, dtype=float), np.asarray(weights, dtype=float))


def samples(points):
    return SampleSet(np.asarray(points, dtype=float).reshape(len(points), -1), 0,
                     GenerationMode.UNIFORM)


def random_dist(rng, k=4, d=2):
    w = rng.dirichlet(np.ones(k))
    return DiscreteDistribution(rng.random((k, d)), w / w.sum())


def linprog_transport(p, q, order=1):
    cost = cdist(p.atoms, q.atoms) ** order
    k1, k2 = cost.shape
    a_eq = np.vstack([np.kron(np.eye(k1), np.ones((1, k2))), np.kron(np.ones((1, k1)), np.eye(k2))])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([p.weights, q.weights]),
                  bounds=(0, None), method="highs")
    return res.fun


def test_kantorovich_identity():
    p = dist([[0.1], [0.7]], [0.3, 0.7])
    assert kantorovich(p, p)[0] == pytest.approx(0.0, abs=1e-12)


def test_kantorovich_point_masses():
    assert kantorovich(dist([[0.0]], [1.0]), dist([[1.0]], [1.0]))[0] == pytest.approx(1.0)


def test_kantorovich_split_mass():
    value, plan = kantorovich(dist([[0.0], [1.0]], [0.5, 0.5]), dist([[0.0]], [1.0]))
    assert value == pytest.approx(0.5)
    np.testing.assert_allclose(plan.plan, [[0.5], [0.5]], atol=1e-12)


def test_wasserstein_examples():
    a, b = np.array([0.2, 0.1]), np.array([0.9, 0.4])
    for n in (1, 2, 3):
        assert wasserstein_n(dist([a], [1.0]), dist([b], [1.0]), n) == pytest.approx(np.linalg.norm(a - b))
    p, q = dist([[0.0], [1.0]], [0.5, 0.5]), dist([[0.0]], [1.0])
    assert wasserstein_n(p, q, 2) == pytest.approx(np.sqrt(0.5))


def test_plan_marginals():
    rng = np.random.default_rng(0)
    p, q = random_dist(rng, 5), random_dist(rng, 3)
    _, plan = kantorovich(p, q)
    np.testing.assert_allclose(plan.plan.sum(axis=1), p.weights, atol=1e-9)
    np.testing.assert_allclose(plan.plan.sum(axis=0), q.weights, atol=1e-9)
    assert plan.plan.min() >= -1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_kantorovich_matches_1d_cdf_oracle(seed):
    rng = np.random.default_rng(seed)
    k1, k2 = rng.integers(1, 6, size=2)
    a, b = rng.random(k1), rng.random(k2)
    wa, wb = rng.dirichlet(np.ones(k1)), rng.dirichlet(np.ones(k2))
    value = kantorovich(DiscreteDistribution(a, wa), DiscreteDistribution(b, wb))[0]
    assert value == pytest.approx(wasserstein_distance(a, b, wa, wb), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2, 3]))
def test_transport_matches_linprog(seed, order):
    rng = np.random.default_rng(seed)
    p, q = random_dist(rng, 4, 2), random_dist(rng, 5, 2)
    assert wasserstein_n(p, q, order) ** order == pytest.approx(linprog_transport(p, q, order), abs=1e-9)


def test_wasserstein_monotone_in_order():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p, q = random_dist(rng), random_dist(rng)
        w = [wasserstein_n(p, q, n) for n in (1, 2, 3)]
        assert w[0] <= w[1] + 1e-9 and w[1] <= w[2] + 1e-9


def test_mixture_merges_atoms():
    p = dist([[0.0], [1.0]], [0.5, 0.5])
    q = dist([[1.0], [2.0]], [0.5, 0.5])
    m = mixture([p, q], [0.5, 0.5])
    np.testing.assert_allclose(m.atoms.ravel(), [0.0, 1.0, 2.0])
    np.testing.assert_allclose(m.weights, [0.25, 0.5, 0.25])


def test_project_fixed_point():
    p = dist([[0.2], [0.6]], [0.4, 0.6])
    out = project_to_support(p, samples([[0.2], [0.6], [0.9]]))
    np.testing.assert_allclose(out.atoms.ravel(), [0.2, 0.6])
    np.testing.assert_allclose(out.weights, [0.4, 0.6])


def test_project_to_endpoints():
    p = dist([[0.1], [0.9]], [0.5, 0.5])
    out = project_to_support(p, samples([[0.0], [1.0]]))
    np.testing.assert_allclose(out.weights, [0.5, 0.5])
    assert kantorovich(out, p)[0] == pytest.approx(0.1)


def test_project_empty():
    with pytest.raises(EmptySampleSet):
        project_to_support(dist([[0.5]], [1.0]), np.zeros((0, 1)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_projection_within_beta(seed):
    rng = np.random.default_rng(seed)
    box = SupportBox.unit(2)
    p = random_dist(rng, 5, 2)
    s = samples(rng.random((8, 2)))
    exact = kantorovich(project_to_support(p, s, ProjectionMode.EXACT_LP), p)[0]
    near = kantorovich(project_to_support(p, s, ProjectionMode.NEAREST_ATOM), p)[0]
    beta = covering_radius(box, s, 201)
    assert exact <= near + 1e-9
    assert near <= np.max(cdist(p.atoms, s.points).min(axis=1)) + 1e-9
    # the grid value may sit below the true radius by at most a half diagonal
    assert near <= beta + np.sqrt(2) / 400 + 1e-9


def test_distance_to_set_member_is_zero():
    s = samples([[0.0], [0.5], [1.0]])
    aset = build_discretized(AmbiguitySpec.simplex(), s)
    assert distance_to_set(dist([[0.5]], [1.0]), aset) == pytest.approx(0.0, abs=1e-9)


def test_distance_to_degenerate_set():
    s = samples([[0.2]])
    aset = build_discretized(AmbiguitySpec.simplex(), s)
    assert distance_to_set(dist([[0.9]], [1.0]), aset) == pytest.approx(0.7)


def test_distance_to_moment_set_grid_oracle():
    pts = np.array([[0.0], [0.5], [1.0]])
    aset = build_discretized(AmbiguitySpec.moment_box([0.3], 0.1, 0.1), samples(pts))
    rng = np.random.default_rng(3)
    for _ in range(5):
        q = dist(rng.random((3, 1)), rng.dirichlet(np.ones(3)))
        best = np.inf
        for i, j in itertools.product(range(101), repeat=2):
            if i + j > 100:
                continue
            p = np.array([i, j, 100 - i - j]) / 100
            mean = p @ pts[:, 0]
            if 0.2 - 1e-12 <= mean <= 0.4 + 1e-12:
                member = DiscreteDistribution.from_weights(pts, p).support_only()
                best = min(best, wasserstein_distance(q.atoms[:, 0], member.atoms[:, 0],
                                                      q.weights, member.weights))
        value = distance_to_set(q, aset)
        assert value <= best + 1e-9
        assert best - value <= 0.01


def test_distance_rejects_mean_variance():
    s = samples([[0.0], [1.0]])
    spec = AmbiguitySpec.mean_variance([0.5], [[0.25]], 0.5, 0.5, 1.2)
    with pytest.raises(NonLinearSet):
        distance_to_set(dist([[0.5]], [1.0]), build_discretized(spec, s))


def test_distance_to_empty_set():
    s = samples([[0.0], [0.1]])
    aset = build_discretized(AmbiguitySpec.moment_box([0.9], 0.01, 0.01), s)
    with pytest.raises(InfeasibleSet):
        distance_to_set(dist([[0.0]], [1.0]), aset)


def test_hausdorff_identical_sets():
    s = samples([[0.0], [0.4], [1.0]])
    a = build_discretized(AmbiguitySpec.moment_box([0.5], 0.2, 0.2), s)
    assert hausdorff_estimate(a, a, directions=16) == pytest.approx(0.0, abs=1e-9)


def test_hausdorff_singletons():
    a = build_discretized(AmbiguitySpec.simplex(), samples([[0.1, 0.2]]))
    b = build_discretized(AmbiguitySpec.simplex(), samples([[0.7, 0.9]]))
    assert hausdorff_estimate(a, b, directions=4) == pytest.approx(np.hypot(0.6, 0.7))


def brute_hausdorff(verts_a, pts_a, verts_b, pts_b):
    """Max over vertices of one set of the linprog distance to the hull of the other."""
    def d_to_set(p, pts_p, verts, pts):
        k1, k2, nv = len(p), len(pts), len(verts)
        cost = cdist(pts_p, pts).ravel()
        rows = np.kron(np.eye(k1), np.ones((1, k2)))
        cols = np.kron(np.ones((1, k1)), np.eye(k2))
        a_eq = np.vstack([np.hstack([rows, np.zeros((k1, nv))]),
                          np.hstack([cols, -np.array(verts).T]),
                          np.concatenate([np.zeros(k1 * k2), np.ones(nv)])[None, :]])
        b_eq = np.concatenate([p, np.zeros(k2), [1.0]])
        res = linprog(np.concatenate([cost, np.zeros(nv)]), A_eq=a_eq, b_eq=b_eq,
                      bounds=(0, None), method="highs")
        return res.fun
    ab = max(d_to_set(v, pts_a, verts_b, pts_b) for v in verts_a)
    ba = max(d_to_set(v, pts_b, verts_a, pts_a) for v in verts_b)
    return max(ab, ba)


def test_hausdorff_exhaustive_matches_oracle():
    pa = np.array([[0.0], [0.5], [1.0]])
    pb = np.array([[0.1], [0.45], [0.8]])
    a = build_discretized(AmbiguitySpec.moment_box([0.5], 0.1, 0.1), samples(pa))
    b = build_discretized(AmbiguitySpec.moment_box([0.4], 0.1, 0.1), samples(pb))
    va, vb = enumerate_vertices(a), enumerate_vertices(b)
    assert len(va) <= 6 and len(vb) <= 6
    oracle = brute_hausdorff(va, pa, vb, pb)
    assert hausdorff_estimate(a, b, exhaustive=True) == pytest.approx(oracle, abs=1e-7)
    assert hausdorff_estimate(a, b, directions=32) <= oracle + 1e-9
