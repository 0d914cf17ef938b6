from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsehx.coarse import (DepthRule, ScenarioConfig, asdim_bounds, check_separation,
                             cx_lambda_complex, oracle_compare, pd_scenario,
                             verify_separation_report)
from coarsehx.errors import EmptyComplement, EmptySubspace, OracleBudget, UnsupportedScenario
from coarsehx.space import from_graph, from_points, select_subset
from helpers import gen


def test_depth_rule_parse():
    assert DepthRule.parse(None)(3) == 10
    assert DepthRule.parse("2r+4")(1) == 6
    assert DepthRule.parse("r")(5) == 5
    assert DepthRule.parse(10)(7) == 10
    assert DepthRule.parse("3*r+1/2")(1) == Fraction(7, 2)


def test_column_separates_grid41():
    s = gen("grid", n=2, side=41)
    rep = check_separation(s, select_subset(s, {"type": "column"}), [1, 2, 3], 10)
    assert [(c.n_components, c.n_deep) for c in rep.cells] == [(2, 2)] * 3
    assert rep.separated and verify_separation_report(s, rep) == []
    assert "finite-scale" in rep.to_dict()["note"]


def test_central_ball_does_not_separate():
    s = gen("grid", n=2, side=41)
    rep = check_separation(s, select_subset(s, {"type": "ball", "radius": 3}), [1], 10)
    assert rep.cells[0].n_deep == 1 and not rep.separated


def test_cut_vertex_path5():
    rep = check_separation(gen("path", length=5), [2], [0], 1)
    assert rep.cells[0].n_deep == 2 and rep.cells[0].witnesses == [0, 4]


def test_separation_errors():
    s = gen("path", length=4)
    with pytest.raises(EmptyComplement):
        check_separation(s, range(4), [1])
    with pytest.raises(EmptySubspace):
        check_separation(s, [], [1])


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 30), st.data())
def test_separation_monotone_in_depth(n, data):
    s = from_graph(n, [(i, i + 1) for i in range(n - 1)])
    A = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True))
    if len(A) == n:
        return
    r = data.draw(st.integers(0, 3))
    d1 = data.draw(st.integers(0, 10))
    d2 = d1 + data.draw(st.integers(0, 10))
    a = check_separation(s, A, [r], d1).cells[0]
    b = check_separation(s, A, [r], d2).cells[0]
    assert b.n_deep <= a.n_deep
    if not a.separated:
        assert not b.separated
    assert verify_separation_report(s, check_separation(s, A, [r], d2)) == []


def test_oracle_path3_full_simplex():
    ox = cx_lambda_complex(gen("path", length=3), 1, 2)
    assert ox.simplices[2] == [(0, 1, 2)] and ox.witnesses[(0, 1, 2)] == 1


def test_oracle_far_points_no_edge():
    s = from_points([[0], [5]], norm="l1")
    assert cx_lambda_complex(s, 2, 2).count(1) == 0


def test_oracle_single_point():
    ox = cx_lambda_complex(from_points([[0]], norm="l1"), 1, 2)
    assert ox.simplices == {0: [(0,)]}


def test_oracle_budget():
    with pytest.raises(OracleBudget):
        cx_lambda_complex(gen("path", length=13), 1)


def test_oracle_compare_examples():
    assert oracle_compare(gen("path", length=3), 1, [0, 1]).equal == {0: True, 1: True}
    c6 = oracle_compare(gen("cycle", length=6), 1, [1])
    assert c6.equal[1] and c6.oracle[1] == (1, [])
    assert oracle_compare(from_points([[0]], "l1"), 2).all_equal


def test_oracle_on_point_cloud():
    s = gen("random-geometric", n_points=10, seed=2)
    for lam in (Fraction(1, 10), Fraction(1, 4)):
        r = oracle_compare(s, lam)
        assert r.all_equal and r.identical_simplices


def test_asdim_grid33():
    rep = asdim_bounds(gen("grid", n=2, side=33), "ball-doubling(1)", (0, 1, 2), 3)
    assert rep.lower_bound == 2 and rep.upper_bound_witness == 2
    assert rep.upper_family.startswith("brick")
    assert rep.diagnostics == []


def test_asdim_path33():
    rep = asdim_bounds(gen("path", length=33), "ball-doubling(1)", (0, 1), 3)
    assert rep.lower_bound == 1 and rep.upper_bound_witness == 1


def test_asdim_single_point():
    rep = asdim_bounds(gen("path", length=1, frontier="none"), "ball-doubling(1)", (0, 1, 2), 3)
    assert rep.lower_bound == 0
    assert rep.stable[0]["rank"] == 1
    assert all(rep.stable[k]["rank"] == 0 for k in (1, 2))
    assert rep.to_dict()["lower_bound"] == 0


def test_asdim_no_class_is_minus_infinity():
    rep = asdim_bounds(gen("path", length=33, frontier=[32]), "ball-doubling(1)", (0, 1), 3)
    assert rep.lower_bound is None and rep.to_dict()["lower_bound"] == "-inf"


def test_scenario_grid41():
    s = gen("grid", n=2, side=41)
    col = pd_scenario(s, select_subset(s, {"type": "column"}))
    assert col.verdict == "consistent" and col.bounds.lower_bound == 1
    assert col.top_stable["rank"] == 1
    ball = pd_scenario(s, select_subset(s, {"type": "ball", "radius": 3}))
    assert ball.verdict == "no claim"


def test_scenario_grid1_midpoint():
    rep = pd_scenario(gen("grid", n=1, side=41), [20])
    assert rep.separation.separated and rep.verdict == "consistent"
    assert rep.top_stable["rank"] == 1 and rep.bounds.lower_bound == 0


def test_scenario_needs_model_dim():
    with pytest.raises(UnsupportedScenario):
        pd_scenario(gen("cycle", length=20), [0])
