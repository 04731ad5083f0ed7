"""Multiple-group random coefficient regression problems on finite grids.

A group is described by its tabulated regression matrices G(x) (one l x p
matrix per grid point), the error covariance Sigma, the random-effects
covariance D, the number m of observations per unit and the number n of
units. Designs are probability vectors over a group's grid.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matrixkit as mk
from .errors import (
    CountMismatch,
    IndexOutOfRange,
    NotPositiveDefinite,
    NotSymmetric,
    ShapeMismatch,
)

SUPPORT_THRESHOLD = 1e-8
RENORMALIZE_TOL = 1e-9


@dataclass(frozen=True)
class GridPoint:
    index: int
    label: str
    gmat: np.ndarray  # (l, p)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gmat, dtype=float))
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite regression matrix at point {self.label}")
        object.__setattr__(self, "gmat", g)


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """One group of observational units sharing a group-design."""

    points: tuple
    sigma: np.ndarray
    dmat: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        points = tuple(self.points)
        if not points:
            raise ShapeMismatch("a group needs at least one grid point")
        shape = points[0].gmat.shape
        for pt in points:
            if pt.gmat.shape != shape:
                raise ShapeMismatch(
                    f"grid point {pt.label} has G of shape {pt.gmat.shape}, expected {shape}"
                )
        l, p = shape
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        dmat = np.atleast_2d(np.asarray(self.dmat, dtype=float))
        if sigma.shape != (l, l):
            raise ShapeMismatch(f"sigma must be {l}x{l}, got {sigma.shape}")
        if dmat.shape != (p, p):
            raise ShapeMismatch(f"D must be {p}x{p}, got {dmat.shape}")
        if not mk.is_symmetric(sigma):
            raise NotSymmetric("sigma is not symmetric")
        mk.cholesky(sigma)
        if not mk.is_symmetric(dmat) or not mk.is_psd(dmat):
            raise NotPositiveDefinite("D must be symmetric positive semidefinite")
        if int(self.m) < 1 or int(self.n) < 1:
            raise ValueError("m and n must be positive integers")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "dmat", dmat)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    @property
    def k(self):
        return len(self.points)

    @property
    def l(self):  # noqa: E743
        return self.points[0].gmat.shape[0]

    @property
    def p(self):
        return self.points[0].gmat.shape[1]

    @property
    def labels(self):
        return [pt.label for pt in self.points]

    @cached_property
    def delta(self):
        """Adjusted dispersion m * D."""
        return self.m * self.dmat

    @cached_property
    def gmats(self):
        """Untransformed G(x) for every grid point, shape (k, l, p)."""
        return np.stack([pt.gmat for pt in self.points])

    @cached_property
    def gtilde(self):
        """Sigma^{-1/2} G(x) for every grid point, shape (k, l, p)."""
        g = self.gmats
        if np.array_equal(self.sigma, np.eye(self.l)):
            return g
        s = mk.spd_sqrt_inverse(self.sigma)
        return np.einsum("ab,kbp->kap", s, g)

    @cached_property
    def outer(self):
        """Per-point moment matrices G~(x)^T G~(x), shape (k, p, p)."""
        gt = self.gtilde
        return np.einsum("kap,kaq->kpq", gt, gt)


@dataclass(frozen=True, eq=False)
class Design:
    """Approximate design: a probability vector over a group's grid."""

    weights: np.ndarray
    support_threshold: float = SUPPORT_THRESHOLD

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel().copy()
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("design weights must be a non-empty finite vector")
        if np.any(w < 0):
            raise ValueError("design weights must be non-negative")
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValueError(f"design weights sum to {total!r}, not 1")
        w /= total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None

    @property
    def support(self):
        return np.flatnonzero(self.weights > self.support_threshold)

    @classmethod
    def uniform(cls, k):
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def one_point(cls, k, t):
        if not 0 <= t < k:
            raise IndexOutOfRange(f"point index {t} outside [0, {k})")
        w = np.zeros(k)
        w[t] = 1.0
        return cls(w)


@dataclass(frozen=True, eq=False)
class CompoundProblem:
    """s groups together with the criterion to minimise."""

    groups: tuple
    criterion: object
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise ValueError("a problem needs at least one group")
        p = groups[0].p
        for g in groups:
            if g.p != p:
                raise ShapeMismatch("all groups must share the parameter dimension p")
        self.criterion.validate(p)
        if getattr(self.criterion, "label", None) == "IMSE" and not shared_grid(groups):
            raise ShapeMismatch("IMSE requires identical grids and regression matrices in all groups")
        object.__setattr__(self, "groups", groups)

    @property
    def s(self):
        return len(self.groups)

    @property
    def p(self):
        return self.groups[0].p

    @property
    def total_units(self):
        return sum(g.n for g in self.groups)

    def uniform_designs(self):
        return [Design.uniform(g.k) for g in self.groups]

    def with_groups(self, groups):
        return CompoundProblem(tuple(groups), self.criterion, dict(self.meta))


def shared_grid(groups):
    first = groups[0]
    for g in groups[1:]:
        if g.k != first.k or g.labels != first.labels:
            return False
        if any(not np.array_equal(a.gmat, b.gmat) for a, b in zip(first.points, g.points)):
            return False
    return True


def identical_groups(groups):
    """True when grid, G, Sigma, D and m coincide for all groups (n may differ)."""
    if not shared_grid(groups):
        return False
    first = groups[0]
    return all(
        g.m == first.m
        and np.array_equal(g.sigma, first.sigma)
        and np.array_equal(g.dmat, first.dmat)
        for g in groups[1:]
    )


def weights_of(d):
    if isinstance(d, Design):
        return d.weights
    return np.asarray(d, dtype=float).ravel()


def monomial_points(xs, degree):
    """Grid points with G(x) = (1, x, ..., x^degree) as a single row."""
    pts = []
    for t, x in enumerate(xs):
        x = float(x)
        pts.append(GridPoint(t, f"{x:.12g}", np.array([[x**j for j in range(degree + 1)]])))
    return tuple(pts)


def monomial_group(xs, degree, dmat, m, n, sigma=1.0):
    return GroupSpec(monomial_points(xs, degree), np.atleast_2d(sigma), dmat, m, n)


def transformed_gmat(g, point_index):
    if not 0 <= point_index < g.k:
        raise IndexOutOfRange(f"point index {point_index} outside [0, {g.k})")
    return g.gtilde[point_index]


def moment_matrix(g, d):
    """M(xi) = sum_h w_h G~(x_h)^T G~(x_h)."""
    w = weights_of(d)
    if w.size != g.k:
        raise ShapeMismatch(f"design has {w.size} weights, grid has {g.k} points")
    return np.tensordot(w, g.outer, axes=1)


def moment_linearity_check(g, d):
    """Max-norm gap between M(xi) and the weighted sum of one-point moment matrices."""
    w = weights_of(d)
    direct = moment_matrix(g, d)
    pieces = np.zeros_like(direct)
    for t in range(g.k):
        if w[t] != 0.0:
            pieces += w[t] * moment_matrix(g, Design.one_point(g.k, t))
    return float(np.max(np.abs(direct - pieces)))


def exact_to_approximate(counts, m):
    counts = np.asarray(counts)
    if m < 1 or np.any(counts < 0):
        raise CountMismatch("counts must be non-negative and m positive")
    if int(counts.sum()) != int(m):
        raise CountMismatch(f"counts sum to {int(counts.sum())}, expected {m}")
    return Design(counts / float(m))
