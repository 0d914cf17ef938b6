import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsehx.errors import BadClass, HorizonTooSmall, SpecError, StageOutOfRange
from coarsehx.limit import (DirectSystem, compose, element_is_limit_trivial, limit_report,
                            persistent_rank_table, stable_rank, truncated_colimit)


def test_compose_scalars():
    d = DirectSystem.from_matrices([1, 1, 1], [[[2]], [[3]]])
    assert compose(d, 1, 3).matrix == [[6]]
    assert compose(d, 2, 2).matrix == [[1]]


def test_zero_system_dies():
    d = DirectSystem.from_matrices([1, 1, 1], [[[0]], [[1]]])
    t = element_is_limit_trivial(d, 1, [1])
    assert t.trivial_at == 2
    assert t.to_dict()["verdict"] == "trivial"


def test_nontrivial_up_to_horizon():
    d = DirectSystem.from_matrices([1, 1, 1], [[[2]], [[1]]])
    t = element_is_limit_trivial(d, 1, [1])
    assert t.nontrivial_up_to_horizon
    assert truncated_colimit(d).phi(1, [1]) == [2]


def test_colimit_phi():
    d = DirectSystem.from_matrices([1, 1], [[[2]]])
    c = truncated_colimit(d)
    assert c.phi(1, [2]) == [4] and c.rank == 1


def test_stable_rank_verdicts():
    const = DirectSystem.from_matrices([1, 1, 1, 1], [[[1]]] * 3)
    st_ = stable_rank(const)
    assert (st_.rank, st_.undetermined, st_.stabilization_stage) == (1, False, 1)
    dying = DirectSystem.from_matrices([1, 1, 1], [[[1]], [[0]]])
    st_ = stable_rank(dying)
    assert st_.undetermined
    late = DirectSystem.from_matrices([2, 1, 1, 1], [[[1, 0]], [[1]], [[1]]])
    st_ = stable_rank(late)
    assert (st_.rank, st_.undetermined, st_.stabilization_stage) == (1, False, 2)


def test_horizon_too_small():
    d = DirectSystem.from_matrices([1], [])
    with pytest.raises(HorizonTooSmall):
        stable_rank(d)
    with pytest.raises(HorizonTooSmall):
        stable_rank(DirectSystem.from_matrices([1, 1], [[[1]]]), tail_window=1)
    assert limit_report(d).stable is None


def test_errors():
    d = DirectSystem.from_matrices([1, 2], [[[1], [0]]])
    with pytest.raises(StageOutOfRange):
        compose(d, 2, 1)
    with pytest.raises(StageOutOfRange):
        compose(d, 1, 3)
    with pytest.raises(BadClass):
        element_is_limit_trivial(d, 1, [1, 0])
    with pytest.raises(SpecError):
        DirectSystem.from_matrices([1, 2], [[[1]]])


def test_empty_groups_compose():
    d = DirectSystem.from_matrices([1, 0, 1], [[], [[]]])
    assert compose(d, 1, 3).matrix == [[0]]
    assert persistent_rank_table(d) == [[1, 0, 0], [None, 0, 0], [None, None, 1]]


def test_rank_increase_warning():
    # a chain of maps of ranks 0 then 1 cannot happen for composites; fake it via a table check
    d = DirectSystem.from_matrices([1, 1, 1], [[[1]], [[1]]])
    assert limit_report(d).warnings == []


matrices = st.integers(1, 3).flatmap(
    lambda r: st.lists(st.lists(st.lists(st.integers(-2, 2), min_size=r, max_size=r),
                                min_size=r, max_size=r), min_size=1, max_size=4))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_rank_table_is_monotone_and_functorial(mats):
    r = len(mats[0])
    d = DirectSystem.from_matrices([r] * (len(mats) + 1), mats)
    t = persistent_rank_table(d)
    J = d.horizon
    for i in range(J):
        row = [v for v in t[i] if v is not None]
        assert all(a >= b for a, b in zip(row, row[1:]))
        for j in range(i, J):
            # r_{i,j} is bounded by every intermediate stage's r_{k,j} and r_{i,k}
            for k in range(i, j + 1):
                assert t[i][j] <= min(t[i][k], t[k][j])
    for i in range(1, J + 1):
        for j in range(i, J + 1):
            for k in range(j, J + 1):
                assert (compose(d, j, k) @ compose(d, i, j)).matrix == compose(d, i, k).matrix
