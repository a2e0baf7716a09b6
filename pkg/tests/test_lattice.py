import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_paths, compositions
from segword.lattice import (
    Alphabet,
    Segmentation,
    SegmentationError,
    Vocabulary,
    count_paths,
    enumerate_paths,
    format_segmentation,
    invalid_mask,
    label_map,
    mask_invalid,
    parse_segmentation,
    validate,
)


def test_validate_examples():
    assert validate(Segmentation([(0, 3, 0)], 3)) is None
    assert "overlap at t=1" in validate(Segmentation([(0, 2, 0), (1, 2, 1)], 3))
    assert "T=3" in validate(Segmentation([(0, 2, 0)], 3))


def test_validate_other_violations():
    assert "gap" in validate(Segmentation([(0, 1, 0), (2, 1, 0)], 3))
    assert "s=0" in validate(Segmentation([(0, 0, 0), (0, 2, 0)], 2))
    assert "outside vocabulary" in validate(Segmentation([(0, 2, 5)], 2), vocab_size=3)
    assert validate(Segmentation([], 0)) is None
    assert validate(Segmentation([], 2)) is not None


def test_label_map():
    assert label_map(Segmentation([(0, 1, 2), (1, 2, 0)], 3)) == (2, 0)
    with pytest.raises(SegmentationError):
        label_map(Segmentation([(0, 1, 2)], 3))


def test_enumerate_small():
    paths = list(enumerate_paths(2, 2, 1))
    assert [tuple(p.segments) for p in paths] == [((0, 1, 0), (1, 1, 0)), ((0, 2, 0),)]


def test_enumerate_counts():
    assert len(list(enumerate_paths(3, 2, 2))) == 16
    assert len(list(enumerate_paths(3, 2, 2, constraint=[0, 1]))) == 2


def test_enumerate_refuses_large():
    with pytest.raises(ValueError, match="refused"):
        list(enumerate_paths(13, 2, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 7), st.integers(1, 4), st.integers(1, 3))
def test_counts_agree(T, S, V):
    n = len(list(enumerate_paths(T, S, V)))
    assert n == count_paths(T, S, V)
    assert n == sum(V ** len(c) for c in compositions(T, S))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 3), st.data())
def test_constrained_is_filtered_unconstrained(T, S, V, data):
    K = data.draw(st.integers(1, T))
    L = tuple(data.draw(st.lists(st.integers(0, V - 1), min_size=K, max_size=K)))
    constrained = {p.segments for p in enumerate_paths(T, S, V, constraint=L)}
    filtered = {p.segments for p in enumerate_paths(T, S, V) if label_map(p) == L}
    assert constrained == filtered


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 3))
def test_every_enumerated_path_validates_and_is_unique(T, S, V):
    paths = list(enumerate_paths(T, S, V))
    assert all(validate(p, T, V) is None for p in paths)
    assert len({p.segments for p in paths}) == len(paths)
    assert {p.segments for p in paths} == set(all_paths(T, S, V))


def test_format_parse_round_trip():
    pi = Segmentation([(0, 2, 1), (2, 3, 0)], 5)
    text = format_segmentation(pi)
    assert text == "0:2:1 2:3:0"
    assert parse_segmentation(text, 5) == pi


def test_mask_invalid():
    W = np.zeros((3, 2, 2), dtype=np.float32)
    M = mask_invalid(W)
    assert M.dtype == np.float64
    assert np.isneginf(M[2, 1]).all()
    assert np.isfinite(M[:2]).all() and np.isfinite(M[2, 0]).all()
    assert invalid_mask(3, 2).sum() == 1


def test_segmentation_score():
    W = np.arange(12, dtype=float).reshape(3, 2, 2)
    pi = Segmentation([(0, 1, 1), (1, 2, 0)], 3)
    assert pi.score(W) == W[0, 0, 1] + W[1, 1, 0]


def test_alphabet_unknown_character_warns():
    a = Alphabet("abc")
    assert len(a) == 4
    assert a.encode("ca") == (3, 1)
    with pytest.warns(UserWarning, match="unknown character"):
        assert a.encode("az") == (1, 0)


def test_vocabulary():
    v = Vocabulary(("ab", "ba", "c"), Alphabet("abc"), (5, 1, 0))
    assert v.encode(["c", "ab"]) == (2, 0)
    assert v.decode([1]) == ["ba"]
    lu = v.log_unigram()
    assert np.isclose(np.exp(lu).sum(), 1.0)
    assert lu[0] > lu[1] > lu[2]
    with pytest.raises(ValueError):
        Vocabulary(("a", "a"), Alphabet("a"))
    with pytest.raises(ValueError):
        Vocabulary(("a", ""), Alphabet("a"))
