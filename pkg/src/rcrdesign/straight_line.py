"""Two-group straight-line model: closed-form criteria and table reproduction.

Each group has G(x) = (1, x), Sigma = 1 and D = diag(d1, d2) with only one
variance component switched on. On the two-point grid {0, 1} a design is
fixed by the weight w at x = 1, and M(w) = [[1, w], [w, w]].
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .criteria import a_criterion, d_criterion
from .errors import DomainError
from .model import CompoundProblem, Design, monomial_group
from .solver import SolverConfig, solve

VARIANTS = ("random-intercept", "random-slope")

# (case, n1, n2, m1, m2, w1*, w2*) reference optima to 3 decimals, weights at x = 1
TABLE1 = (
    (1, 1, 1, 2, 8, 0.298, 0.450),
    (2, 1, 1, 5, 5, 0.414, 0.414),
    (3, 1, 1, 8, 2, 0.450, 0.298),
    (4, 1, 1, 4, 16, 0.300, 0.450),
    (5, 1, 1, 10, 10, 0.414, 0.414),
    (6, 1, 1, 16, 4, 0.450, 0.300),
    (7, 1, 2, 2, 8, 0.256, 0.439),
    (8, 1, 2, 5, 5, 0.414, 0.414),
    (9, 1, 2, 8, 2, 0.460, 0.338),
    (10, 1, 2, 4, 16, 0.258, 0.439),
    (11, 1, 2, 10, 10, 0.414, 0.414),
    (12, 1, 2, 16, 4, 0.460, 0.339),
)
TABLE2 = (
    (1, 1, 1, 2, 8, 0.725, 0.181),
    (2, 1, 1, 5, 5, 0.290, 0.290),
    (3, 1, 1, 8, 2, 0.181, 0.725),
    (4, 1, 1, 4, 16, 0.579, 0.145),
    (5, 1, 1, 10, 10, 0.232, 0.232),
    (6, 1, 1, 16, 4, 0.145, 0.579),
    (7, 1, 2, 2, 8, 0.823, 0.206),
    (8, 1, 2, 5, 5, 0.290, 0.290),
    (9, 1, 2, 8, 2, 0.155, 0.618),
    (10, 1, 2, 4, 16, 0.651, 0.163),
    (11, 1, 2, 10, 10, 0.232, 0.232),
    (12, 1, 2, 16, 4, 0.125, 0.500),
)
TABLES = {1: (TABLE1, "random-intercept", "A"), 2: (TABLE2, "random-slope", "D")}


@dataclass(frozen=True)
class TwoGroupLineCase:
    n: tuple
    m: tuple
    d: float = 1.0
    variant: str = "random-intercept"
    criterion: str = "A"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.criterion not in ("A", "D"):
            raise ValueError("criterion must be 'A' or 'D'")
        if min(self.n) < 1 or min(self.m) < 1 or self.d < 0:
            raise ValueError("n, m must be positive and d non-negative")

    @property
    def dmat(self):
        if self.variant == "random-intercept":
            return np.diag([self.d, 0.0])
        return np.diag([0.0, self.d])

    def problem(self, grid=(0.0, 1.0)):
        groups = [monomial_group(grid, 1, self.dmat, m, n) for n, m in zip(self.n, self.m)]
        crit = a_criterion(2) if self.criterion == "A" else d_criterion()
        return CompoundProblem(tuple(groups), crit)


def line_designs(w1, w2):
    """Two-point designs on {0, 1} with weights w_i at x = 1."""
    return [Design([1.0 - w1, w1]), Design([1.0 - w2, w2])]


def _check(w1, w2):
    for w in (w1, w2):
        if not 0.0 < w < 1.0:
            raise DomainError(f"weight {w!r} outside (0, 1)")


def _intercept_terms(case, w1, w2):
    _check(w1, w2)
    n = np.asarray(case.n, dtype=float)
    m = np.asarray(case.m, dtype=float)
    w = np.array([w1, w2])
    d = case.d
    q = d * m + 1.0
    a = np.sum(n * m / q)
    b = np.sum(n * m * w * (d * m * (1.0 - w) + 1.0) / q)
    c = np.sum(n * m * w / q)
    num_a = np.sum(n * m * (d * m * w * (1.0 - w) + 1.0 + w) / q)
    return a * b - c**2, num_a


def phi_d_intercept(case, w1, w2):
    det, _ = _intercept_terms(case, w1, w2)
    return -np.log(det)


def phi_a_intercept(case, w1, w2):
    det, num = _intercept_terms(case, w1, w2)
    return num / det


def phi_d_slope(case, w1, w2):
    """Random-slope D-criterion; ``case.d`` is the slope variance."""
    _check(w1, w2)
    n = np.asarray(case.n, dtype=float)
    m = np.asarray(case.m, dtype=float)
    w = np.array([w1, w2])
    d = case.d
    return -np.log(np.sum(n * m * w / (d * m * w + 1.0)) * np.sum(n * m * (1.0 - w)))


@dataclass(frozen=True)
class TableRow:
    case: int
    n1: int
    n2: int
    m1: int
    m2: int
    w1: float
    w2: float
    status: str
    reference_w1: float
    reference_w2: float

    @property
    def ratio(self):
        return str(Fraction(self.m1, self.m2))

    def columns(self):
        """Row in the tabular layout, weights rounded to 3 decimals."""
        w1, w2 = round(self.w1, 3), round(self.w2, 3)
        return [
            self.case, self.n1, self.n2, self.m1, self.m2, self.ratio,
            w1, round(1.0 - w1, 3), w2, round(1.0 - w2, 3),
        ]


TABLE_HEADER = ["case", "n1", "n2", "m1", "m2", "m1/m2", "w1", "1-w1", "w2", "1-w2"]


def table_case(table_id, row):
    _, variant, crit = TABLES[table_id]
    case, n1, n2, m1, m2, _, _ = row
    return TwoGroupLineCase((n1, n2), (m1, m2), 1.0, variant, crit)


def reproduce_table(table_id, config=None, grid=(0.0, 1.0)):
    """Solve every case of table 1 or 2 with the general solver."""
    if table_id not in TABLES:
        raise ValueError("table_id must be 1 or 2")
    config = config or SolverConfig(gap_tol=1e-10)
    rows = []
    for row in TABLES[table_id][0]:
        prob = table_case(table_id, row).problem(grid)
        report = solve(prob, config)
        w1 = float(report.designs[0].weights[-1])
        w2 = float(report.designs[1].weights[-1])
        rows.append(TableRow(*row[:5], w1, w2, report.status, row[5], row[6]))
    return rows
