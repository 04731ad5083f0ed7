"""Minimisation of compound criteria over a product of probability simplices.

The default algorithm sweeps cyclically over the groups. Each group update
moves along the steepest of three directions: toward the best one-point
design, away from the worst support point, or an exchange of mass between
the two. A golden-section search picks the step and a root search on the
analytic slope polishes it. Convergence is declared through the
equivalence-theorem conditions: no one-point direction may decrease the
criterion and all support points must be stationary.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import matrixkit as mk
from .criteria import Evaluation, group_information, value_from_information
from .errors import Infeasible, NoFeasibleStart
from .model import Design, weights_of

ALGORITHMS = ("vertex-direction", "multiplicative", "projected-gradient")
STEP_RULES = ("exact-line-search-1d", "armijo")
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "vertex-direction"
    max_iters: int = 5000
    gap_tol: float = 1e-7
    step_rule: str = "exact-line-search-1d"
    restarts: int = 20
    seed: int = 0
    line_tol: float = 1e-10
    prune_tol: float = 1e-10
    # a support point whose removal makes M_i singular may not carry less
    # weight than this; otherwise the infimum lies on the singular boundary
    essential_tol: float = 1e-7
    support_threshold: float = 1e-8

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}; choose from {STEP_RULES}")
        if not self.gap_tol > 0:
            raise ValueError("gap_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolveReport:
    designs: list
    value: float
    gap: float
    iterations: int
    converged: bool
    status: str  # "converged" | "max_iters" | "not_attained" | "stalled"
    support_gap: float = 0.0
    history: list = field(default_factory=list)

    @property
    def weights(self):
        return [d.weights for d in self.designs]


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    return Design(w / w.sum())


def round_to_exact(d, m):
    """Largest-remainder rounding of a design to integer counts summing to m."""
    w = weights_of(d)
    raw = w * m
    counts = np.floor(raw + 1e-12).astype(int)
    left = int(m - counts.sum())
    if left > 0:
        rem = raw - counts
        order = sorted(range(w.size), key=lambda t: (-rem[t], t))
        for t in order[:left]:
            counts[t] += 1
    return counts


def golden_section(f, lo, hi, tol=1e-10):
    """Minimise a unimodal ``f`` on [lo, hi]; returns (x, f(x)).

    The endpoints are evaluated as well so that steps to the boundary of
    the interval (dropping a support point) are found exactly.
    """
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    scale = max(1.0, abs(hi - lo))
    while b - a > tol * scale:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx < best[1]:
            best = (x, fx)
    return best


def armijo(f, f0, slope, hi, shrink=0.5, c1=1e-4, max_halvings=60):
    alpha = hi
    for _ in range(max_halvings):
        fa = f(alpha)
        if fa <= f0 + c1 * alpha * slope:
            return alpha, fa
        alpha *= shrink
    return 0.0, f0


class _GroupLine:
    """phi along w_i + alpha * direction with the other groups held fixed."""

    def __init__(self, prob, ev, i, direction):
        self.prob, self.i = prob, i
        g = prob.groups[i]
        self.group = g
        self.base = ev.weights[i]
        self.direction = direction
        self.scale = g.n * g.m
        self.other = ev.info - self.scale * ev.psi[i]
        self.criterion = ev.criterion

    def __call__(self, alpha):
        w = self.base + alpha * self.direction
        if np.any(w < -1e-15):
            return np.inf
        try:
            _, _, bmat = group_information(self.group, np.maximum(w, 0.0))
        except Infeasible:
            return np.inf
        return value_from_information(self.criterion, self.other + self.scale * bmat)

    def slope(self, alpha):
        """d phi / d alpha; +inf where the trial design is infeasible."""
        w = np.maximum(self.base + alpha * self.direction, 0.0)
        try:
            _, ainv, bmat = group_information(self.group, w)
            cov = mk.fast_spd_inverse(self.other + self.scale * bmat)
        except (Infeasible, mk.NotPositiveDefinite):
            return np.inf
        middle = cov if self.criterion.kind == "D" else cov @ self.criterion.vmat @ cov
        r = bmat @ ainv
        dmat = np.tensordot(self.direction, self.group.outer, axes=1)
        return -self.scale * float(np.sum((r.T @ middle @ r) * dmat))


def _refine(line, x, lo, hi, width):
    """Root of the analytic slope around the golden-section point.

    Function values near a minimum only resolve the argmin to about
    sqrt(machine eps); the slope resolves it to machine precision. The
    root is polished with the Illinois variant of regula falsi.
    """
    a, b = max(lo, x - width), min(hi, x + width)
    sa, sb = line.slope(a), line.slope(b)
    if not (sa < 0 < sb):
        # the value scan can miss a tiny minimiser entirely; widen
        a, b = lo, hi
        sa, sb = line.slope(a), line.slope(b)
        if not (sa < 0 < sb):
            return x
    side = 0
    for _ in range(60):
        c = (a * sb - b * sa) / (sb - sa) if np.isfinite(sb) else 0.5 * (a + b)
        if not a < c < b:
            c = 0.5 * (a + b)
        sc = line.slope(c)
        if sc == 0:
            return c
        if b - a <= 1e-15 * max(1.0, abs(c)):
            break
        if sc < 0:
            a, sa = c, sc
            if side == -1:
                sb *= 0.5
            side = -1
        else:
            b, sb = c, sc
            if side == 1:
                sa *= 0.5
            side = 1
        if -1e-15 * line.scale <= sc < 0:
            break
    # the left end has a negative slope, which certifies descent
    return a


def _line_step(prob, ev, i, direction, hi, slope, config):
    line = _GroupLine(prob, ev, i, direction)
    f0 = ev.value
    # rounding allowance for value comparisons; far below the 1e-12
    # monotonicity slack
    noise = 1e-14 * (1.0 + abs(f0))

    def descends(alpha):
        # phi is convex along the line and its slope at 0 is negative, so a
        # non-positive slope at alpha proves phi(alpha) <= phi(0) even when
        # rounding in the value hides the gain
        if alpha <= 0:
            return False
        if line(alpha) <= f0 + noise:
            return True
        return config.step_rule != "armijo" and line.slope(alpha) <= 0

    if config.step_rule == "armijo":
        alpha, fa = armijo(line, f0, slope, hi)
    else:
        alpha, fa = golden_section(line, 0.0, hi, config.line_tol)
        if alpha < hi:
            fine = _refine(line, alpha, 0.0, hi, 1e-6 * max(1.0, hi))
            if fine > 0 and (line(fine) <= fa + noise or line.slope(fine) <= 0):
                alpha = fine
    if not descends(alpha):
        return ev.weights[i]
    # a minimiser on the singular boundary is approached, never reached:
    # back off until the renormalised design is usable
    for _ in range(60):
        w = np.maximum(ev.weights[i] + alpha * direction, 0.0)
        w = w / w.sum()
        try:
            group_information(prob.groups[i], w)
            if descends(alpha):
                return w
        except Infeasible:
            pass
        alpha *= 0.5
    return ev.weights[i]


def _vertex_direction_weights(prob, ev, i, config):
    w = ev.weights[i]
    dphi = ev.point_derivatives(i)
    toward = int(np.argmin(dphi))
    supp = np.flatnonzero(w > 0)
    away = int(supp[np.argmax(dphi[supp])])
    toward_slope = dphi[toward]
    away_slope = -dphi[away]
    scale = 1.0 + abs(ev.value)
    if min(toward_slope, away_slope) >= -1e-15 * scale:
        return w
    # toward a vertex, away from a support point, or an exchange of mass
    # between the two; the steepest of the three is taken
    exchange_slope = toward_slope + away_slope if toward != away else np.inf
    if w[away] >= 1.0:
        away_slope = np.inf
    best = min(toward_slope, away_slope, exchange_slope)
    if best == exchange_slope:
        direction = np.zeros_like(w)
        direction[toward], direction[away] = 1.0, -1.0
        hi, slope = w[away], exchange_slope
    elif best == toward_slope:
        direction = -w.copy()
        direction[toward] += 1.0
        hi, slope = 1.0, toward_slope
    else:
        direction = w.copy()
        direction[away] -= 1.0
        hi, slope = w[away] / (1.0 - w[away]), away_slope
    return _line_step(prob, ev, i, direction, hi, slope, config)


def _multiplicative_weights(prob, ev, i, config):
    w = ev.weights[i]
    lhs = np.maximum(ev.lhs(i), 0.0)
    rhs = float(w @ lhs)
    if rhs <= 0:
        return w
    target = w * lhs / rhs
    direction = target - w
    slope = float(ev.gradient(i) @ direction)
    if slope >= 0:
        return w
    return _line_step(prob, ev, i, direction, 1.0, slope, config)


def _projected_gradient_weights(prob, ev, i, config):
    w = ev.weights[i]
    grad = ev.gradient(i)
    spread = float(np.max(grad) - np.min(grad))
    if spread <= 0:
        return w
    target = project_simplex(w - grad / spread).weights
    direction = target - w
    slope = float(grad @ direction)
    if slope >= 0:
        return w
    return _line_step(prob, ev, i, direction, 1.0, slope, config)


_UPDATES = {
    "vertex-direction": _vertex_direction_weights,
    "multiplicative": _multiplicative_weights,
    "projected-gradient": _projected_gradient_weights,
}


def vertex_direction_step(prob, designs, i, config=None):
    """One conditional-gradient update of group ``i``; other groups untouched."""
    config = config or SolverConfig()
    ev = Evaluation(prob, designs)
    return Design(_vertex_direction_weights(prob, ev, i, config))


def equivalence_gap(prob, designs):
    """Largest descent rate towards a one-point design, scaled by 1 + |phi|.

    Zero exactly when every partial directional derivative towards a
    one-point design is non-negative, i.e. at a minimiser.
    """
    return _gaps(Evaluation(prob, designs))[0]


def _gaps(ev, support_threshold=0.0):
    scale = 1.0 + abs(ev.value)
    worst, support = 0.0, 0.0
    for i in range(ev.prob.s):
        dphi = ev.point_derivatives(i)
        worst = max(worst, float(np.max(-dphi)))
        supp = ev.weights[i] > support_threshold
        support = max(support, float(np.max(dphi[supp])))
    return max(worst, 0.0) / scale, max(support, 0.0) / scale


def _essential_points(prob, weights):
    """(weight, group, index) for support points M_i cannot lose and stay nonsingular."""
    out = []
    for i, (g, w) in enumerate(zip(prob.groups, weights)):
        for t in np.flatnonzero(w > 0):
            trial = w.copy()
            trial[t] = 0.0
            if trial.sum() > 0:
                try:
                    group_information(g, trial / trial.sum())
                    continue
                except Infeasible:
                    pass
            out.append((float(w[t]), i, int(t)))
    return out


def essential_weight(prob, weights):
    """Smallest weight among support points each M_i cannot lose and stay nonsingular."""
    return min((w for w, _, _ in _essential_points(prob, weights)), default=np.inf)


def heading_to_singularity(ev, tol, slope_tol=0.0):
    """True when an essential point has weight below ``tol`` and the criterion
    still decreases as that weight shrinks: the infimum lies on the singular
    boundary and is not attained.

    ``slope_tol`` is the derivative, relative to 1 + |phi|, that counts as
    still decreasing.
    """
    scale = 1.0 + abs(ev.value)
    for w, i, t in _essential_points(ev.prob, ev.weights):
        if w < tol and ev.point_derivatives(i)[t] > slope_tol * scale:
            return True
    return False


def _prune(prob, weights, i, tol):
    w = weights[i]
    small = (w > 0) & (w < tol)
    if not np.any(small):
        return w
    trial = np.where(small, 0.0, w)
    trial = trial / trial.sum()
    try:
        group_information(prob.groups[i], trial)
    except Infeasible:
        return w
    return trial


def initial_designs(prob, config):
    """Uniform designs, falling back to uniform designs on random p-subsets."""
    weights = [np.full(g.k, 1.0 / g.k) for g in prob.groups]
    rng = np.random.default_rng(config.seed)
    for i, g in enumerate(prob.groups):
        try:
            group_information(g, weights[i])
            continue
        except Infeasible:
            pass
        size = min(g.k, max(1, math.ceil(g.p / g.l)))
        for _ in range(config.restarts):
            chosen = rng.choice(g.k, size=size, replace=False)
            w = np.zeros(g.k)
            w[chosen] = 1.0 / size
            try:
                group_information(g, w)
            except Infeasible:
                continue
            weights[i] = w
            break
        else:
            raise NoFeasibleStart(f"no feasible starting design found for group {i}")
    return weights


def solve(prob, config=None, start=None):
    """Minimise ``prob.criterion``; returns a SolveReport."""
    config = config or SolverConfig()
    if start is None:
        weights = initial_designs(prob, config)
    else:
        weights = [np.array(weights_of(d), dtype=float) for d in start]
    try:
        ev = Evaluation(prob, weights)
    except Infeasible:
        raise NoFeasibleStart("starting designs are infeasible") from None
    update = _UPDATES[config.algorithm]
    gap, sgap = _gaps(ev, config.support_threshold)
    history = [(0, float(ev.value), gap)]
    status = "max_iters"
    iterations = 0
    while True:
        if heading_to_singularity(ev, config.essential_tol):
            status = "not_attained"
            break
        if gap <= config.gap_tol and sgap <= config.gap_tol:
            status = "converged"
            break
        if iterations >= config.max_iters:
            break
        iterations += 1
        moved = False
        for i in range(prob.s):
            weights = list(ev.weights)
            weights[i] = update(prob, ev, i, config)
            weights[i] = _prune(prob, weights, i, config.prune_tol)
            moved = moved or not np.array_equal(weights[i], ev.weights[i])
            ev = Evaluation(prob, weights)
        gap, sgap = _gaps(ev, config.support_threshold)
        history.append((iterations, float(ev.value), gap))
        if not moved and not (gap <= config.gap_tol and sgap <= config.gap_tol):
            # a sweep is deterministic, so an unchanged sweep repeats forever;
            # an essential point that still wants to shrink means the singular
            # boundary was reached at working precision
            if heading_to_singularity(ev, np.inf, config.gap_tol):
                status = "not_attained"
            else:
                status = "stalled"
            break
    designs = [Design(w, config.support_threshold) for w in ev.weights]
    return SolveReport(
        designs=designs,
        value=float(ev.value),
        gap=gap,
        iterations=iterations,
        converged=status == "converged",
        status=status,
        support_gap=sgap,
        history=history,
    )
