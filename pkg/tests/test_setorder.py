import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import set_less_by_membership
from setvalued.setorder import (
    BoundOrderError,
    Hyperbox,
    RelationMode,
    box_relate,
    cone_dominates,
    minimal_elements,
    vectorize,
)


def box(lb, ub):
    return Hyperbox(np.atleast_1d(lb), np.atleast_1d(ub))


@st.composite
def boxes(draw, k):
    lo = draw(st.lists(st.integers(0, 4), min_size=k, max_size=k))
    width = draw(st.lists(st.integers(0, 3), min_size=k, max_size=k))
    return box(np.array(lo, float), np.array(lo, float) + np.array(width, float))


def test_cone_dominates():
    assert cone_dominates((0, 0), (1, 1), strict=True)
    assert not cone_dominates((0, 2), (1, 1))
    assert not cone_dominates((0, 2), (1, 1), strict=True)
    assert cone_dominates((1, 1), (1, 1))
    assert not cone_dominates((1, 1), (1, 1), strict=True)
    with pytest.raises(ValueError):
        cone_dominates((1, 1), (1, 1, 1))


def test_box_relate_examples():
    A, B = box((0, 0), (1, 1)), box((1, 1), (2, 2))
    assert box_relate(A, B)
    assert not box_relate(box((0, 0), (3, 3)), B)
    assert box_relate(box((0, 0), (3, 3)), B, RelationMode("lower"))
    I = box(1, 2)
    assert box_relate(I, I) and box_relate(I, box(1, 2))
    with pytest.raises(ValueError):
        box_relate(A, box(0, 1))


def test_hyperbox_validation():
    with pytest.raises(ValueError):
        box((1, 0), (0, 1))
    assert box(3, 3).dim == 1


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 2).flatmap(lambda k: st.tuples(boxes(k), boxes(k))),
       st.sampled_from(["lower", "upper", "both"]), st.booleans())
def test_corner_rule_matches_membership(pair, kind, strict):
    A, B = pair
    expected = set_less_by_membership(A.lb, A.ub, B.lb, B.ub, kind, strict)
    assert box_relate(A, B, RelationMode(kind, strict)) == expected


@settings(max_examples=100, deadline=None)
@given(st.tuples(boxes(2), boxes(2), boxes(2)))
def test_set_less_reflexive_transitive(triple):
    A, B, C = triple
    assert box_relate(A, A)
    if box_relate(A, B) and box_relate(B, C):
        assert box_relate(A, C)


def test_minimal_elements_examples():
    fam = [box(0, 1), box(1, 2)]
    assert minimal_elements(fam, strict=True) == [0]
    assert minimal_elements(fam, strict=False) == [0]
    assert minimal_elements([box(0, 1)], True) == [0]
    assert minimal_elements([box(0, 1)], False) == [0]
    assert minimal_elements([box(0, 1), box(0, 1)], True) == [0, 1]


def test_minimal_elements_weak_vs_strict():
    # [0,1] and [0,2]: [0,1] <= [0,2] but not strictly (equal lower corners)
    fam = [box(0, 1), box(0, 2)]
    assert minimal_elements(fam, strict=True) == [0]
    assert minimal_elements(fam, strict=False) == [0, 1]


def test_minimal_elements_errors():
    with pytest.raises(ValueError):
        minimal_elements([])
    with pytest.raises(ValueError):
        minimal_elements([box(0, 1), box((0, 0), (1, 1))])


@settings(max_examples=60, deadline=None)
@given(st.lists(boxes(2), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_minimal_elements_properties(fam, rnd):
    strict = set(minimal_elements(fam, True))
    weak = set(minimal_elements(fam, False))
    assert strict <= weak
    perm = list(range(len(fam)))
    rnd.shuffle(perm)
    permuted = [fam[i] for i in perm]
    assert {perm[i] for i in minimal_elements(permuted, True)} == strict
    assert {perm[i] for i in minimal_elements(permuted, False)} == weak


def test_vectorize_interval():
    f = lambda x: x**2
    spec = vectorize(f, f, 1)
    assert spec.arity == 2
    assert np.array_equal(spec(3.0), [9.0, 9.0])
    spec = vectorize(lambda x: x**2, lambda x: x**2 + 1, 1)
    assert np.array_equal(spec(2.0), [4.0, 5.0])
    assert spec.slots == (("lb", 0), ("ub", 0))


def test_vectorize_rectangle_stacks_upper_first():
    spec = vectorize(lambda x: (x, 2 * x), lambda x: (x + 1, 2 * x + 1), 2)
    assert spec.arity == 4
    assert np.array_equal(spec(1.0), [2.0, 3.0, 1.0, 2.0])
    assert spec.slot("lb", 0) == 2 and spec.slot("ub", 1) == 1


def test_vectorize_detects_bound_violation():
    spec = vectorize(lambda x: x + 1, lambda x: x, 1)
    with pytest.raises(BoundOrderError):
        spec(0.0)
