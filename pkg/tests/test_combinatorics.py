import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from ustatlab.combinatorics import (
    chunk_bounds,
    combination_chunk,
    iter_combination_chunks,
    rank_combination,
    sample_index_tuples,
    unrank_combination,
)


@pytest.mark.parametrize("n,k", [(1, 1), (5, 1), (7, 3), (9, 4), (6, 6)])
def test_unrank_follows_lexicographic_order(n, k):
    expected = list(itertools.combinations(range(n), k))
    assert [tuple(unrank_combination(r, n, k)) for r in range(comb(n, k))] == expected


@given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, min(n, 6)))), st.data())
def test_rank_inverts_unrank(nk, data):
    n, k = nk
    r = data.draw(st.integers(0, comb(n, k) - 1))
    assert rank_combination(unrank_combination(r, n, k), n) == r


def test_unrank_rejects_out_of_range():
    with pytest.raises(ValueError):
        unrank_combination(comb(6, 2), 6, 2)


@pytest.mark.parametrize("n,m", [(6, 1), (7, 2), (8, 3), (9, 4), (5, 5)])
@pytest.mark.parametrize("chunk_size", [1, 4, 5, 1000])
def test_chunks_concatenate_to_all_tuples(n, m, chunk_size):
    chunks = list(iter_combination_chunks(n, m, chunk_size))
    got = np.concatenate(chunks)
    assert got.shape == (comb(n, m), m)
    assert [tuple(row) for row in got] == list(itertools.combinations(range(n), m))
    assert all(len(c) <= chunk_size for c in chunks)


def test_combination_chunk_midrange():
    all_tuples = list(itertools.combinations(range(10), 3))
    got = combination_chunk(10, 3, 17, 53)
    assert [tuple(row) for row in got] == all_tuples[17:53]


def test_chunk_bounds_cover_range():
    bounds = chunk_bounds(12, 3, 50)
    assert bounds[0][0] == 0 and bounds[-1][1] == comb(12, 3)
    assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))
    with pytest.raises(ValueError):
        chunk_bounds(12, 3, 0)


def test_sampled_tuples_are_sorted_distinct_and_in_range():
    rng = np.random.default_rng(1)
    idx = sample_index_tuples(30, 4, 5000, rng)
    assert idx.shape == (5000, 4)
    assert np.all(np.diff(idx, axis=1) > 0)
    assert idx.min() >= 0 and idx.max() < 30


def test_sampled_tuples_are_uniform_over_indices():
    rng = np.random.default_rng(2)
    size = 60_000
    idx = sample_index_tuples(5, 2, size, rng)
    counts = np.bincount(idx.ravel(), minlength=5)
    # every index belongs to a uniform 2-subset of 5 with probability 2/5
    expected = size * 2 / 5
    sd = np.sqrt(size * 0.4 * 0.6)
    assert np.all(np.abs(counts - expected) < 5 * sd)


def test_sampled_pairs_cover_every_subset_evenly():
    rng = np.random.default_rng(3)
    size = 50_000
    idx = sample_index_tuples(4, 2, size, rng)
    codes = idx[:, 0] * 4 + idx[:, 1]
    _, counts = np.unique(codes, return_counts=True)
    assert len(counts) == 6
    assert np.all(np.abs(counts - size / 6) < 5 * np.sqrt(size / 6))


def test_sampling_more_indices_than_available_fails():
    with pytest.raises(ValueError):
        sample_index_tuples(3, 4, 10, np.random.default_rng(0))


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(1, 12))
def test_full_sample_tuple_is_the_identity(n, extra):
    idx = sample_index_tuples(n, n, extra, np.random.default_rng(n))
    assert np.array_equal(idx, np.tile(np.arange(n), (extra, 1)))
