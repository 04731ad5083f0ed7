"""Certification of candidate design tuples through the equivalence theorem.

A tuple is certified when, in every group, the sensitivity inequality
lhs(x) <= rhs holds at every grid point and holds with equality at the
support points. Slacks are reported raw (rhs - lhs) and normalized by
1 + |rhs|; the tolerance applies to the normalized values.
"""

from dataclasses import dataclass

import numpy as np

from .criteria import CriterionSpec, Evaluation
from .errors import GroupsNotIdentical, Infeasible
from .model import (
    SUPPORT_THRESHOLD,
    CompoundProblem,
    Design,
    GroupSpec,
    identical_groups,
    weights_of,
)
from .solver import SolverConfig, solve


@dataclass(frozen=True)
class GroupVerification:
    labels: list
    weights: np.ndarray
    lhs: np.ndarray
    rhs: float
    slack: np.ndarray
    normalized_slack: np.ndarray
    support: np.ndarray  # boolean flags

    @property
    def support_residuals(self):
        return np.abs(self.normalized_slack[self.support])

    @property
    def raw_support_residuals(self):
        return np.abs(self.slack[self.support])


@dataclass(frozen=True)
class VerificationReport:
    per_group: list
    value: float
    max_violation: float
    max_support_residual: float
    certified: bool
    tolerance: float


def verify(prob, designs, tol=1e-6, support_threshold=SUPPORT_THRESHOLD):
    """Scan every grid point of every group and certify or refute optimality.

    Raises Infeasible when the candidate has a singular moment matrix.
    """
    ev = Evaluation(prob, designs)
    per_group = []
    max_violation = 0.0
    max_support = 0.0
    for i, g in enumerate(prob.groups):
        lhs = ev.lhs(i)
        rhs = ev.rhs(i)
        slack = rhs - lhs
        norm = slack / (1.0 + abs(rhs))
        w = np.array(ev.weights[i], dtype=float)
        support = w > support_threshold
        gv = GroupVerification(g.labels, w, lhs, float(rhs), slack, norm, support)
        per_group.append(gv)
        max_violation = max(max_violation, float(np.max(-norm)))
        if np.any(support):
            max_support = max(max_support, float(np.max(gv.support_residuals)))
    certified = max_violation <= tol and max_support <= tol
    return VerificationReport(per_group, float(ev.value), max_violation, max_support, certified, tol)


def _random_tuple(prob, rng, attempts=100):
    for _ in range(attempts):
        tup = [rng.dirichlet(np.ones(g.k)) for g in prob.groups]
        try:
            Evaluation(prob, tup)
        except Infeasible:
            continue
        return tup
    raise Infeasible("could not sample a feasible design tuple")


def saddle_check(prob, designs, trials=50, seed=0):
    """Largest violation of the saddle-point inequalities over random tuples.

    At a minimiser, Phi(xi*, xi) >= 0 and Phi(xi, xi*) <= 0 for all xi; the
    return value is max(0, Phi(xi, xi*), -Phi(xi*, xi)) over the samples.
    """
    rng = np.random.default_rng(seed)
    star = [weights_of(d) for d in designs]
    at_star = Evaluation(prob, star)
    worst = 0.0
    for _ in range(trials):
        other = _random_tuple(prob, rng)
        forward = at_star.directional_derivative(other)
        backward = Evaluation(prob, other).directional_derivative(star)
        worst = max(worst, -forward, backward)
    return float(worst)


def single_group_problem(prob):
    """The single-group problem whose optimum is optimal for identical groups.

    For L-criteria this is the fixed-effects criterion tr(M^{-1} V); for D it
    is ln det(M^{-1} + Delta) up to a constant.
    """
    if not identical_groups(prob.groups):
        raise GroupsNotIdentical("groups differ in grid, G, Sigma, D or m")
    g = prob.groups[0]
    if prob.criterion.kind == "L":
        single = GroupSpec(g.points, g.sigma, np.zeros_like(g.dmat), 1, 1)
    else:
        single = GroupSpec(g.points, g.sigma, g.dmat, g.m, 1)
    return CompoundProblem((single,), CriterionSpec(prob.criterion.kind, prob.criterion.vmat))


def replicated_designs(prob, config=None):
    config = config or SolverConfig(gap_tol=1e-10)
    report = solve(single_group_problem(prob), config)
    w = report.designs[0].weights
    return [Design(w) for _ in prob.groups], report


def replication_check(prob, tol=1e-6, config=None):
    """Solve the single-group problem, replicate to all groups and verify."""
    designs, _ = replicated_designs(prob, config)
    return verify(prob, designs, tol).certified
