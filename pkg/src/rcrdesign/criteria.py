"""Compound L- and D-criteria for the mean parameters of multiple-group RCR models.

With A_i = M_i^{-1}, psi_i = (A_i + Delta_i)^{-1} and the pooled information
S = sum_i n_i m_i psi_i, the criteria are

    phi_L = tr(S^{-1} V),        phi_D = -ln det S.

Differentiating through M_i gives d phi = -n_i m_i tr(K_i dM_i) with

    K_i = A_i psi_i S^{-1} V S^{-1} psi_i A_i     (L)
    K_i = A_i psi_i S^{-1} psi_i A_i              (D)

so the partial directional derivative towards a one-point design at x is
n_i m_i (tr(K_i M_i) - tr(G~(x) K_i G~(x)^T)). The two traces are the
right- and left-hand sides of the optimality inequalities returned by
``sensitivity_L`` / ``sensitivity_D``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import matrixkit as mk
from .errors import (
    Infeasible,
    MeasureNotNormalized,
    NotPositiveDefinite,
    ShapeMismatch,
    ZeroVector,
)
from .model import Design, moment_matrix, weights_of


@dataclass(frozen=True, eq=False)
class CriterionSpec:
    """Criterion kind ("D" or "L") and, for L, the weight matrix V = L^T L.

    ``label`` records which member of the family was requested (A, c, IMSE,
    L or D) and only affects reporting and problem validation.
    """

    kind: str
    vmat: np.ndarray = None
    label: str = None

    def __post_init__(self):
        if self.kind not in ("D", "L"):
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind == "L":
            if self.vmat is None:
                raise ValueError("an L-criterion needs a matrix V")
            v = np.atleast_2d(np.asarray(self.vmat, dtype=float))
            if not mk.is_symmetric(v) or not mk.is_psd(v):
                raise NotPositiveDefinite("V must be symmetric positive semidefinite")
            object.__setattr__(self, "vmat", v)
        elif self.vmat is not None:
            raise ValueError("the D-criterion takes no matrix V")
        if self.label is None:
            object.__setattr__(self, "label", self.kind)

    def validate(self, p):
        if self.kind == "L" and self.vmat.shape != (p, p):
            raise ShapeMismatch(f"V is {self.vmat.shape}, parameter dimension is {p}")


def build_v_identity(p):
    return np.eye(p)


def build_v_c(c):
    c = np.asarray(c, dtype=float).ravel()
    if not np.any(c):
        raise ZeroVector("c must be non-zero")
    return np.outer(c, c)


def build_v_imse(grid, nu="uniform"):
    """V = sum_t nu_t G(x_t)^T G(x_t) over a tabulated grid.

    ``grid`` is a GroupSpec or a sequence of (l x p) regression matrices.
    Untransformed G is used: the quadrature targets the mean response.
    """
    gmats = [pt.gmat for pt in grid.points] if hasattr(grid, "points") else [
        np.atleast_2d(np.asarray(g, dtype=float)) for g in grid
    ]
    k = len(gmats)
    if isinstance(nu, str):
        if nu != "uniform":
            raise ValueError(f"unknown quadrature measure {nu!r}")
        nu = np.full(k, 1.0 / k)
    nu = np.asarray(nu, dtype=float).ravel()
    if nu.size != k:
        raise ShapeMismatch(f"measure has {nu.size} weights, grid has {k} points")
    if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
        raise MeasureNotNormalized(f"quadrature weights sum to {nu.sum()!r}")
    return sum(w * g.T @ g for w, g in zip(nu, gmats))


def d_criterion():
    return CriterionSpec("D")


def a_criterion(p):
    return CriterionSpec("L", build_v_identity(p), "A")


def c_criterion(c):
    return CriterionSpec("L", build_v_c(c), "c")


def imse_criterion(grid, nu="uniform"):
    return CriterionSpec("L", build_v_imse(grid, nu), "IMSE")


def l_criterion(vmat):
    return CriterionSpec("L", vmat, "L")


def psi(mmat, delta):
    """(M^{-1} + Delta)^{-1}; matrix-concave in M."""
    return mk.spd_inverse(mk.spd_inverse(mmat) + delta)


def group_information(group, weights):
    """(M, M^{-1}, psi) for one group, or raise Infeasible when M is singular."""
    mmat = np.tensordot(weights, group.outer, axes=1)
    try:
        ainv = mk.fast_spd_inverse(mmat)
        bmat = mk.fast_spd_inverse(ainv + group.delta)
    except NotPositiveDefinite:
        raise Infeasible() from None
    return mmat, ainv, bmat


def value_from_information(criterion, smat):
    """Criterion value from the pooled information S (inf if singular)."""
    try:
        if criterion.kind == "D":
            return -mk.fast_logdet(smat)
        return float(np.sum(mk.fast_spd_inverse(smat) * criterion.vmat))
    except NotPositiveDefinite:
        return np.inf


class Evaluation:
    """Criterion value and the shared factors at one design tuple.

    Construction raises Infeasible when some moment matrix is singular.
    All sensitivity quantities reuse the cached inverses.
    """

    def __init__(self, prob, designs, criterion=None):
        self.prob = prob
        self.criterion = criterion if criterion is not None else prob.criterion
        self.weights = [weights_of(d) for d in designs]
        if len(self.weights) != prob.s:
            raise ShapeMismatch(f"{len(self.weights)} designs for {prob.s} groups")
        self._kernels = {}
        self.mats, self.ainv, self.psi = [], [], []
        for g, w in zip(prob.groups, self.weights):
            if w.size != g.k:
                raise ShapeMismatch(f"design has {w.size} weights, grid has {g.k} points")
            mmat, ainv, bmat = group_information(g, w)
            self.mats.append(mmat)
            self.ainv.append(ainv)
            self.psi.append(bmat)
        self.info = sum(g.n * g.m * b for g, b in zip(prob.groups, self.psi))
        try:
            self.cov = mk.fast_spd_inverse(self.info)
        except NotPositiveDefinite:
            raise Infeasible("infeasible: singular information sum") from None

    @cached_property
    def value(self):
        if self.criterion.kind == "D":
            return -mk.fast_logdet(self.info)
        return float(np.sum(self.cov * self.criterion.vmat))

    @cached_property
    def _middle(self):
        c = self.cov
        if self.criterion.kind == "D":
            return c
        return c @ self.criterion.vmat @ c

    def kernel(self, i):
        k = self._kernels.get(i)
        if k is None:
            r = self.psi[i] @ self.ainv[i]
            k = r.T @ self._middle @ r
            k = self._kernels[i] = 0.5 * (k + k.T)
        return k

    def lhs(self, i):
        """tr(G~(x_t) K_i G~(x_t)^T) for every grid point t of group i."""
        gt = self.prob.groups[i].gtilde
        return np.einsum("kap,pq,kaq->k", gt, self.kernel(i), gt)

    def rhs(self, i):
        return mk.trace_product(self.kernel(i), self.mats[i])

    def gradient(self, i):
        g = self.prob.groups[i]
        return -g.n * g.m * self.lhs(i)

    def point_derivatives(self, i):
        """Partial directional derivatives towards every one-point design of group i."""
        g = self.prob.groups[i]
        return g.n * g.m * (self.rhs(i) - self.lhs(i))

    def partial_derivative(self, i, direction):
        g = self.prob.groups[i]
        target = moment_matrix(g, direction)
        return -g.n * g.m * mk.trace_product(self.kernel(i), target - self.mats[i])

    def directional_derivative(self, directions):
        return sum(self.partial_derivative(i, d) for i, d in enumerate(directions))


def evaluate(prob, designs):
    return Evaluation(prob, designs)


def covariance(prob, designs):
    """Pooled covariance [sum n_i m_i (M_i^{-1} + Delta_i)^{-1}]^{-1}.

    Raises Infeasible when a moment matrix is singular.
    """
    return Evaluation(prob, designs).cov


def criterion_value(prob, designs):
    try:
        return Evaluation(prob, designs).value
    except Infeasible:
        return np.inf


def l_value(prob, designs, vmat=None):
    if vmat is None:
        if prob.criterion.kind != "L":
            raise ValueError("problem criterion is not an L-criterion; pass vmat")
        crit = prob.criterion
    else:
        crit = CriterionSpec("L", vmat)
    try:
        return Evaluation(prob, designs, crit).value
    except Infeasible:
        return np.inf


def d_value(prob, designs):
    try:
        return Evaluation(prob, designs, CriterionSpec("D")).value
    except Infeasible:
        return np.inf


def _require(prob, kind):
    if prob.criterion.kind != kind:
        raise ValueError(f"problem criterion is {prob.criterion.kind}, expected {kind}")


def partial_derivative(prob, designs, i, direction):
    return Evaluation(prob, designs).partial_derivative(i, direction)


def partial_derivative_L(prob, designs, i, direction):
    _require(prob, "L")
    return partial_derivative(prob, designs, i, direction)


def partial_derivative_D(prob, designs, i, direction):
    _require(prob, "D")
    return partial_derivative(prob, designs, i, direction)


def directional_derivative(prob, designs, directions):
    """Full directional derivative at ``designs`` towards the tuple ``directions``."""
    return Evaluation(prob, designs).directional_derivative(directions)


def sensitivity(prob, designs, i, t):
    ev = Evaluation(prob, designs)
    if not 0 <= t < prob.groups[i].k:
        raise IndexError(f"point index {t} out of range")
    return float(ev.lhs(i)[t]), float(ev.rhs(i))


def sensitivity_L(prob, designs, i, t):
    _require(prob, "L")
    return sensitivity(prob, designs, i, t)


def sensitivity_D(prob, designs, i, t):
    _require(prob, "D")
    return sensitivity(prob, designs, i, t)


def weight_gradient(prob, designs, i):
    return Evaluation(prob, designs).gradient(i)


def one_point_designs(k):
    return [Design.one_point(k, t) for t in range(k)]
