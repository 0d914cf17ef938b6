import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsehx.cover import (Strategy, ball_cover, brick_cover, build_anti_cech, check_system,
                            cover_from_sets, refinement_projection, verify_pair)
from coarsehx.errors import NotARefinement, SpecError, UnsupportedSpace
from coarsehx.space import from_graph
from helpers import gen


def brute_lebesgue_barrier(c):
    """Least diameter of a point set lying in no member (None if every set fits).

    Every set of diameter strictly below this value lies in a member, so any
    certified Lebesgue bound must not exceed it.
    """
    s = c.space
    n = s.n
    keys = s.keys
    bits = c.member_bits
    diam = [0] * (1 << n)
    best = None
    for m in range(1, 1 << n):
        top = m.bit_length() - 1
        rest = m ^ (1 << top)
        d = diam[rest]
        r = rest
        while r:
            low = r & -r
            d = max(d, int(keys[top, low.bit_length() - 1]))
            r ^= low
        diam[m] = d
        if not any(m & b == m for b in bits):
            best = d if best is None else min(best, d)
    return None if best is None else s.value(best)


def test_ball_cover_path3():
    s = gen("path", length=3)
    c = ball_cover(s, 1)
    assert c.members == (frozenset({0, 1}), frozenset({0, 1, 2}), frozenset({1, 2}))
    assert c.multiplicity == 3
    assert c.diameter_bound == 2


def test_ball_cover_grid_multiplicity():
    assert ball_cover(gen("grid", n=2, side=5), 1).multiplicity == 9


def test_point_lebesgue_path9():
    assert ball_cover(gen("path", length=9), 2).lebesgue_lower_bound == 3


def test_two_interval_cover_lebesgue():
    s = gen("path", length=3)
    c = cover_from_sets(s, [{0, 1}, {1, 2}])
    assert c.lebesgue_lower_bound == 1
    assert brute_lebesgue_barrier(c) == 2


def test_brick_multiplicities():
    assert brick_cover(gen("grid", n=1, side=16), 4).multiplicity == 2
    assert brick_cover(gen("grid", n=2, side=16), 4).multiplicity == 3
    assert brick_cover(gen("grid", n=2, side=4), 8).size == 1


def test_brick_needs_grid():
    with pytest.raises(UnsupportedSpace):
        brick_cover(gen("cycle", length=8), 2)


def test_brick_on_path_matches_1d_grid():
    a = brick_cover(gen("path", length=33), 4)
    b = brick_cover(gen("grid", n=1, side=33), 4)
    assert a.members == b.members
    assert a.diameter_bound == b.diameter_bound


def test_projection_path5():
    s = gen("path", length=5)
    p = refinement_projection(ball_cover(s, 1), ball_cover(s, 2))
    assert p.phi == (0, 0, 1, 2, 2)


def test_not_a_refinement():
    s = gen("path", length=4)
    a = cover_from_sets(s, [{0, 1, 2}, {3}])
    b = cover_from_sets(s, [{0, 1}, {1, 2, 3}])
    with pytest.raises(NotARefinement):
        refinement_projection(a, b)
    assert not verify_pair(b, a)


@pytest.mark.parametrize("tie", ["min", "max", "random"])
def test_projection_ties_are_refinements(tie):
    s = gen("grid", n=2, side=9)
    ci, cj = ball_cover(s, 1), ball_cover(s, 2)
    phi = refinement_projection(ci, cj, tie=tie, seed=3).phi
    for u, v in enumerate(phi):
        assert ci.member(u) <= cj.member(v)


def test_ball_doubling_path64():
    sysm = build_anti_cech(gen("path", length=64), "ball-doubling(1)", 4)
    assert sysm.scales == (1, 2, 4, 8)
    assert check_system(sysm) == []


def test_window_cap_path8():
    sysm = build_anti_cech(gen("path", length=8), "ball-doubling(1)", 4)
    assert sysm.scales == (1,)
    assert any("window-cap: stopped at scale 2" in w for w in sysm.warnings)
    over = build_anti_cech(gen("path", length=8), "ball-doubling(1)", 2,
                           allow_window_cap_override=True)
    # past the cap the balls at the two ends already cover the window
    assert over.scales == (1,)
    assert any("window-saturated" in w for w in over.warnings)
    free = build_anti_cech(gen("path", length=8, frontier="none"), "ball-doubling(1)", 3,
                           allow_window_cap_override=True)
    assert free.scales == (1, 2, 4)


def test_brick_doubling_grid33():
    sysm = build_anti_cech(gen("grid", n=2, side=33), "brick-doubling(2)", 4)
    assert sysm.scales == (2, 5)
    assert [c.multiplicity for c in sysm.stages] == [3, 3]
    assert [c.certified_lebesgue for c in sysm.stages] == [2, 8]
    assert check_system(sysm) == []
    one = build_anti_cech(gen("grid", n=1, side=33), "brick-doubling(2)", 4)
    assert one.scales == (2, 4, 8)


def test_saturated_stage_dropped():
    sysm = build_anti_cech(gen("path", length=33), "ball-doubling(1)", 6)
    assert sysm.scales == (1, 2, 4)
    assert any("window-saturated" in w for w in sysm.warnings)


def test_single_point_not_capped():
    sysm = build_anti_cech(gen("path", length=1, frontier="none"), "ball-doubling(1)", 3)
    assert sysm.scales == (1, 2, 4)


def test_strategy_parse():
    assert Strategy.parse("ball-doubling(1/2)").start == Fraction(1, 2)
    assert Strategy.parse({"kind": "brick-doubling", "start": 3}).kind == "brick"
    with pytest.raises(SpecError):
        Strategy.parse("vortex(2)")
    with pytest.raises(SpecError):
        Strategy.parse("brick-doubling(1/2)")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.data())
def test_certified_lebesgue_is_sound_on_paths(n, data):
    s = from_graph(n, [(i, i + 1) for i in range(n - 1)])
    k = data.draw(st.integers(1, 4))
    sets = [set(data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n))) for _ in range(k)]
    sets.append({x for x in range(n) if not any(x in m for m in sets)} or {0})
    c = cover_from_sets(s, sets)
    barrier = brute_lebesgue_barrier(c)
    if barrier is not None:
        assert c.certified_lebesgue <= barrier


@pytest.mark.parametrize("side,lam", [(4, 1), (4, 2), (3, 1)])
def test_certified_lebesgue_sound_for_grid_balls(side, lam):
    for metric in ("linf", "l1", "l2"):
        c = ball_cover(gen("grid", n=2, side=side, metric=metric), lam)
        barrier = brute_lebesgue_barrier(c)
        if barrier is not None:
            assert c.certified_lebesgue <= barrier


@pytest.mark.parametrize("k", [1, 2])
def test_certified_lebesgue_sound_for_bricks(k):
    c = brick_cover(gen("grid", n=2, side=4), k)
    barrier = brute_lebesgue_barrier(c)
    if barrier is not None:
        assert c.certified_lebesgue <= barrier


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(5, 40))
def test_brick_multiplicity_bound(n, k, side):
    if n == 3:
        side = min(side, 14)
    s = gen("grid", n=n, side=side)
    c = brick_cover(s, k)
    assert c.multiplicity <= n + 1
    # every member is a box of the advertised side plus margins
    geom_side, margin = c.params["side"], c.params["margin"]
    ext = c.boxes[1] - c.boxes[0] + 1
    assert (ext <= geom_side + 2 * margin).all()
    assert c.certified_lebesgue >= k - 1
