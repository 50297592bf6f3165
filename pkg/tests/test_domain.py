from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from catseg.domain import (CategoricalSequence, check_probability, decode, encode,
                           frobenius_sq_diff, is_probability, simplex_project)
from catseg.errors import InvalidSequenceError, ShapeMismatchError


def _grid_project(v, step=1e-4):
    """Closest point of the 2-simplex by exhaustive search on a fine grid."""
    t = np.arange(0, 1 + step / 2, step)
    pts = np.stack([t, 1 - t], axis=1)
    return pts[np.argmin(((pts - v) ** 2).sum(axis=1))]


def test_encode_columns():
    X = encode(CategoricalSequence([1, 2, 1], 2))
    np.testing.assert_array_equal(X, [[1, 0, 1], [0, 1, 0]])
    np.testing.assert_array_equal(encode(CategoricalSequence([3], 4))[:, 0], [0, 0, 1, 0])


def test_sequence_rejects_out_of_range_labels():
    with pytest.raises(InvalidSequenceError):
        CategoricalSequence([0, 1], 2)
    with pytest.raises(InvalidSequenceError):
        CategoricalSequence([1, 3], 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(
    lambda r: st.tuples(st.just(r), st.lists(st.integers(1, r), min_size=1, max_size=64))))
def test_encode_decode_round_trip(case):
    r, values = case
    seq = CategoricalSequence(values, r)
    X = encode(seq)
    np.testing.assert_array_equal(X.sum(axis=0), 1)
    assert decode(X) == seq


def test_frobenius_examples(rng):
    a = rng.random((3, 5))
    assert frobenius_sq_diff(a, a) == 0
    X = encode(CategoricalSequence(rng.integers(1, 4, 16), 3))
    assert frobenius_sq_diff(X, np.zeros_like(X)) == 16
    assert frobenius_sq_diff(np.eye(2), np.zeros((2, 2))) == 2
    with pytest.raises(ShapeMismatchError):
        frobenius_sq_diff(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("column", [(0.6, 0.6), (1.2, -0.2), (0.3, 0.7), (-0.4, 0.1)])
def test_simplex_project_matches_grid_search(column):
    got = simplex_project(np.array(column))
    np.testing.assert_allclose(got, _grid_project(np.array(column)), atol=1e-4)


def test_simplex_project_examples():
    np.testing.assert_allclose(simplex_project(np.array([0.3, 0.7])), [0.3, 0.7], atol=1e-15)
    np.testing.assert_allclose(simplex_project(np.array([0.6, 0.6])), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(simplex_project(np.array([1.2, -0.2])), [1.0, 0.0], atol=1e-15)


def test_simplex_project_rejects_nonfinite():
    with pytest.raises(ValueError):
        simplex_project(np.array([[np.nan], [1.0]]))


finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (3, 4), elements=finite))
def test_simplex_project_idempotent_and_nonexpansive(a, b):
    pa, pb = simplex_project(a), simplex_project(b)
    assert is_probability(pa)
    np.testing.assert_allclose(simplex_project(pa), pa, atol=1e-12)
    for j in range(a.shape[1]):
        assert np.linalg.norm(pa[:, j] - pb[:, j]) <= np.linalg.norm(a[:, j] - b[:, j]) + 1e-12
    assert abs(pa.sum(axis=0) - 1).max() <= 1e-12
    assert pa.min() >= 0 and pa.max() <= 1


def test_simplex_project_small_dimensions_match_brute_force(rng):
    # r = 3: the minimizer lies in the relative interior of one face
    for _ in range(50):
        v = rng.normal(size=3)
        got = simplex_project(v)
        best = None
        for support in itertools.chain.from_iterable(
                itertools.combinations(range(3), k) for k in (1, 2, 3)):
            idx = list(support)
            w = np.zeros(3)
            w[idx] = v[idx] - (v[idx].sum() - 1) / len(idx)
            if w.min() < -1e-12:
                continue
            d = ((w - v) ** 2).sum()
            if best is None or d < best[0]:
                best = (d, w)
        np.testing.assert_allclose(got, best[1], atol=1e-12)


def test_check_probability():
    check_probability(np.array([[0.25], [0.75]]))
    with pytest.raises(ValueError):
        check_probability(np.array([[0.5], [0.6]]))
