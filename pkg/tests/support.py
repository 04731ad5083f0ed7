"""Random problem generators and a plain numpy oracle shared by the tests."""

import numpy as np

from rcrdesign.criteria import CriterionSpec
from rcrdesign.model import CompoundProblem, GridPoint, GroupSpec


def random_spd(rng, size, scale=1.0):
    a = rng.standard_normal((size, size))
    return scale * (a @ a.T / size + 0.5 * np.eye(size))


def random_psd(rng, size, rank=None):
    rank = rng.integers(0, size + 1) if rank is None else rank
    a = rng.standard_normal((size, rank))
    return a @ a.T / max(size, 1)


def random_group(rng, p, k, l=1, m=None, n=None):
    points = tuple(GridPoint(t, f"x{t}", rng.standard_normal((l, p))) for t in range(k))
    m = int(rng.integers(1, 11)) if m is None else m
    n = int(rng.integers(1, 6)) if n is None else n
    return GroupSpec(points, random_spd(rng, l), random_psd(rng, p), m, n)


def random_problem(rng, kind=None, max_p=4, max_s=3, max_k=6):
    """Random compound problem with p <= max_p, s <= max_s, k <= max_k."""
    p = int(rng.integers(1, max_p + 1))
    s = int(rng.integers(1, max_s + 1))
    kind = kind or ("D" if rng.random() < 0.5 else "L")
    groups = []
    for _ in range(s):
        l = int(rng.integers(1, 3))
        # one point more than saturation keeps M away from singular
        kmin = max(-(-p // l) + 1, 2)
        k = int(rng.integers(kmin, max(kmin, max_k) + 1))
        groups.append(random_group(rng, p, k, l))
    crit = CriterionSpec("D") if kind == "D" else CriterionSpec("L", random_spd(rng, p))
    return CompoundProblem(tuple(groups), crit)


def random_weights(rng, prob):
    return [rng.dirichlet(np.ones(g.k)) for g in prob.groups]


def oracle_moment(group, w):
    total = np.zeros((group.p, group.p))
    s = np.linalg.inv(np.linalg.cholesky(group.sigma))
    for wt, pt in zip(w, group.points):
        gt = s @ pt.gmat
        total += wt * gt.T @ gt
    return total


def oracle_value(prob, weights):
    """Criterion straight from the definition, using numpy.linalg.inv only."""
    info = np.zeros((prob.p, prob.p))
    for g, w in zip(prob.groups, weights):
        mmat = oracle_moment(g, w)
        info += g.n * g.m * np.linalg.inv(np.linalg.inv(mmat) + g.m * g.dmat)
    if prob.criterion.kind == "D":
        return -np.linalg.slogdet(info)[1]
    return float(np.trace(np.linalg.inv(info) @ prob.criterion.vmat))
