import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcrdesign import straight_line as sl
from rcrdesign.criteria import Evaluation
from rcrdesign.errors import DomainError
from support import oracle_value


def test_fixed_effects_closed_forms():
    # d = 0: S = 2 M(w) with det M = w (1 - w)
    case = sl.TwoGroupLineCase((1, 1), (1, 1), 0.0, "random-intercept", "A")
    assert sl.phi_a_intercept(case, 0.5, 0.5) == pytest.approx(3.0)
    assert sl.phi_d_intercept(case, 0.5, 0.5) == pytest.approx(0.0, abs=1e-15)
    slope = sl.TwoGroupLineCase((1, 1), (1, 1), 0.0, "random-slope", "D")
    assert sl.phi_d_slope(slope, 0.5, 0.5) == pytest.approx(0.0, abs=1e-15)
    w = 0.3
    assert sl.phi_d_slope(slope, w, w) == pytest.approx(-math.log(4 * w * (1 - w)))


@given(
    st.floats(0.01, 0.99), st.floats(0.01, 0.99),
    st.integers(1, 5), st.integers(1, 5), st.integers(1, 20), st.integers(1, 20),
    st.floats(0.0, 3.0),
)
def test_closed_forms_match_matrix_path(w1, w2, n1, n2, m1, m2, d):
    designs = sl.line_designs(w1, w2)
    weights = [x.weights for x in designs]
    for variant, crit, fn in (
        ("random-intercept", "D", sl.phi_d_intercept),
        ("random-intercept", "A", sl.phi_a_intercept),
        ("random-slope", "D", sl.phi_d_slope),
    ):
        case = sl.TwoGroupLineCase((n1, n2), (m1, m2), d, variant, crit)
        prob = case.problem()
        closed = fn(case, w1, w2)
        assert closed == pytest.approx(Evaluation(prob, designs).value, rel=1e-9, abs=1e-9)
        assert closed == pytest.approx(oracle_value(prob, weights), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("w", [0.0, 1.0, -0.1, 1.5])
def test_closed_forms_reject_boundary(w):
    case = sl.TwoGroupLineCase((1, 1), (2, 2))
    with pytest.raises(DomainError):
        sl.phi_a_intercept(case, w, 0.5)
    with pytest.raises(DomainError):
        sl.phi_d_slope(case, 0.5, w)


def test_case_validation():
    with pytest.raises(ValueError):
        sl.TwoGroupLineCase((1, 1), (2, 2), variant="random-quadratic")
    with pytest.raises(ValueError):
        sl.TwoGroupLineCase((1, 1), (2, 2), criterion="E")
    with pytest.raises(ValueError):
        sl.TwoGroupLineCase((0, 1), (2, 2))
    with pytest.raises(ValueError):
        sl.TwoGroupLineCase((1, 1), (2, 2), d=-1.0)
    np.testing.assert_array_equal(sl.TwoGroupLineCase((1, 1), (1, 1), 2.0).dmat, np.diag([2.0, 0.0]))
    np.testing.assert_array_equal(
        sl.TwoGroupLineCase((1, 1), (1, 1), 2.0, "random-slope").dmat, np.diag([0.0, 2.0])
    )


def test_table_case_mapping():
    case = sl.table_case(2, sl.TABLE2[9])
    assert case.n == (1, 2) and case.m == (4, 16)
    assert case.variant == "random-slope" and case.criterion == "D"
    assert sl.table_case(1, sl.TABLE1[0]).variant == "random-intercept"
    with pytest.raises(ValueError):
        sl.reproduce_table(3)


def test_equal_m_rows_are_the_fixed_effects_optimum():
    # equal m makes the groups identical up to n, so the fixed-effects A-optimum applies
    rows = {r.case: r for r in sl.reproduce_table(1)}
    for case in (2, 5, 8, 11):
        assert rows[case].w1 == pytest.approx(math.sqrt(2) - 1, abs=1e-7)
        assert rows[case].w2 == pytest.approx(math.sqrt(2) - 1, abs=1e-7)


def test_table_rows_and_columns():
    rows = sl.reproduce_table(2)
    assert [r.case for r in rows] == list(range(1, 13))
    assert all(r.status == "converged" for r in rows)
    cols = rows[3].columns()
    assert len(cols) == len(sl.TABLE_HEADER)
    assert cols[:6] == [4, 1, 1, 4, 16, "1/4"]
    assert cols[6] == 0.579 and cols[7] == 0.421
    assert cols[8] == 0.145 and cols[9] == 0.855


def test_equal_slope_groups_hit_the_stationary_root():
    # 5w^2 + 2w - 1 = 0 for m = 5, d = 1
    rows = {r.case: r for r in sl.reproduce_table(2)}
    root = (math.sqrt(6) - 1) / 5
    for case in (2, 8):
        assert rows[case].w1 == pytest.approx(root, abs=1e-7)
        assert rows[case].w2 == pytest.approx(root, abs=1e-7)


@pytest.mark.parametrize("table_id", [1, 2])
def test_equal_sizes_swap_places(table_id):
    rows = {r.case: r for r in sl.reproduce_table(table_id)}
    for a, b in ((1, 3), (4, 6)):
        assert rows[a].w1 == pytest.approx(rows[b].w2, abs=1e-6)
        assert rows[a].w2 == pytest.approx(rows[b].w1, abs=1e-6)
