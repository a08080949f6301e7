"""Box supports, sample/quantizer sets and their covering radius."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySampleSet, PoolTooSmall

DEFAULT_GRID_PER_DIM = 401


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned box ``[lower, upper]`` with norm bound ``m_xi``.

    ``m_xi`` defaults to the largest corner norm, the smallest value valid
    for every point in the box.
    """

    lower: np.ndarray
    upper: np.ndarray
    m_xi: float | None = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lower and upper must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("lower must not exceed upper")
        corner = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
        m_xi = corner if self.m_xi is None else float(self.m_xi)
        if m_xi < corner - 1e-12:
            raise ValueError(f"m_xi={m_xi} is below the largest corner norm {corner}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "m_xi", m_xi)

    @classmethod
    def unit(cls, d: int = 1) -> "SupportBox":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, points, tol: float = 1e-12) -> bool:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return bool(np.all(pts >= self.lower - tol) and np.all(pts <= self.upper + tol))


class GenerationMode(str, enum.Enum):
    UNIFORM = "UniformIID"
    QUANTIZER = "GreedyQuantizer"


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int | None = None
    generation_mode: GenerationMode | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] < 1:
            raise EmptySampleSet("a sample set needs at least one point")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("sample points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def prefix(self, count: int) -> "SampleSet":
        return SampleSet(self.points[:count], self.seed, self.generation_mode)


def _draw_distinct(support: SupportBox, count: int, rng: np.random.Generator) -> np.ndarray:
    pts = rng.uniform(support.lower, support.upper, size=(count, support.dim))
    while True:
        _, first = np.unique(pts, axis=0, return_index=True)
        if first.size == count:
            return pts
        dup = np.setdiff1d(np.arange(count), first)
        pts[dup] = rng.uniform(support.lower, support.upper, size=(dup.size, support.dim))


def sample_uniform(support: SupportBox, count: int, seed: int) -> SampleSet:
    """``count`` distinct i.i.d. uniform points in ``support``."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    return SampleSet(_draw_distinct(support, count, rng), seed, GenerationMode.UNIFORM)


def greedy_k_center(pool: np.ndarray, count: int, start: int) -> np.ndarray:
    """Indices chosen by farthest-point traversal from ``pool[start]``."""
    chosen = np.empty(count, dtype=int)
    chosen[0] = start
    dist = np.linalg.norm(pool - pool[start], axis=1)
    for k in range(1, count):
        nxt = int(np.argmax(dist))
        chosen[k] = nxt
        np.minimum(dist, np.linalg.norm(pool - pool[nxt], axis=1), out=dist)
    return chosen


def quantize_greedy(support: SupportBox, count: int, pool_size: int, seed: int) -> SampleSet:
    """Greedy k-center quantizer over a seeded uniform candidate pool.

    The first point is the pool point nearest the box center; each further
    point is the pool point farthest from those already chosen.  For a fixed
    ``(pool_size, seed)`` the result for ``count`` is a prefix of the result
    for any larger count.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if pool_size < count:
        raise PoolTooSmall(f"pool_size={pool_size} < count={count}")
    pool = _draw_distinct(support, pool_size, np.random.default_rng(seed))
    start = int(np.argmin(np.linalg.norm(pool - support.center, axis=1)))
    idx = greedy_k_center(pool, count, start)
    return SampleSet(pool[idx], seed, GenerationMode.QUANTIZER)


def directed_distance(a, b) -> float:
    """``max_{x in a} min_{y in b} ||x - y||`` for finite point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    if b.shape[0] == 0:
        raise EmptySampleSet("reference set is empty")
    dist, _ = cKDTree(b).query(a)
    return float(np.max(dist))


def grid_points(support: SupportBox, grid_per_dim: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, grid_per_dim) for lo, hi in zip(support.lower, support.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def grid_half_diagonal(support: SupportBox, grid_per_dim: int) -> float:
    if grid_per_dim < 2:
        return support.diameter
    return 0.5 * float(np.linalg.norm((support.upper - support.lower) / (grid_per_dim - 1)))


def covering_radius(support: SupportBox, samples: SampleSet,
                    grid_per_dim: int = DEFAULT_GRID_PER_DIM) -> float:
    """Covering radius ``max_{xi in support} min_w ||xi - xi_w||``.

    Exact for one-dimensional supports.  For ``d >= 2`` the maximum is taken
    over a regular grid, so the result ``r`` satisfies
    ``r <= true radius <= r + grid_half_diagonal(support, grid_per_dim)``.
    """
    pts = np.asarray(samples.points if isinstance(samples, SampleSet) else samples, dtype=float)
    if pts.size == 0:
        raise EmptySampleSet("covering radius of an empty sample set")
    pts = pts.reshape(-1, support.dim)
    if support.dim == 1:
        s = np.sort(pts[:, 0])
        gaps = [s[0] - support.lower[0], support.upper[0] - s[-1]]
        if s.size > 1:
            gaps.append(0.5 * float(np.max(np.diff(s))))
        return float(max(gaps))
    return directed_distance(grid_points(support, grid_per_dim), pts)
