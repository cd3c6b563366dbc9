"""Lexicographic enumeration and sampling of index m-subsets.

Exact U-statistics walk every strictly increasing index tuple of a sample.
The tuple stream is cut into contiguous rank ranges; each range is located
by unranking its first tuple (combinadic), so chunks can be generated
independently and in any order while the overall sequence stays fixed.
"""

from math import comb

import numpy as np


def rank_combination(c, n: int) -> int:
    """Returns the lexicographic rank of the sorted tuple c among all k-subsets of range(n)."""
    k = len(c)
    index = sum(comb(n - 1 - v, k - i) for i, v in enumerate(c))
    return comb(n, k) - 1 - index


def unrank_combination(r: int, n: int, k: int) -> list:
    """
    Returns the k-subset of range(n) with lexicographic rank r.

    The complement rank C(n, k) - 1 - r is written greedily in the combinatorial
    number system, sum of C(a_i, k - i) with a_0 > a_1 > ..., and c_i = n - 1 - a_i.
    """
    if not 0 <= r < comb(n, k):
        raise ValueError(f"Rank {r} out of range for C({n}, {k}).")
    remaining = comb(n, k) - 1 - r
    result = []
    bound = n
    for i in range(k):
        j = k - i
        lo, hi = j - 1, bound - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if comb(mid, j) <= remaining:
                lo = mid
            else:
                hi = mid - 1
        result.append(n - 1 - lo)
        remaining -= comb(lo, j)
        bound = lo
    return result


def _next_combination(c: list, n: int):
    """Lexicographic successor of the sorted tuple c over range(n), or None at the end."""
    k = len(c)
    for i in reversed(range(k)):
        if c[i] < n - k + i:
            nxt = c[:i] + [c[i] + 1]
            nxt += [nxt[-1] + j for j in range(1, k - i)]
            return nxt
    return None


def combination_chunk(n: int, m: int, start: int, stop: int) -> np.ndarray:
    """
    Returns the index tuples with lexicographic ranks in [start, stop) as a (k, m) array.

    Tuples sharing their first m-1 indices form a contiguous run in which only
    the last index varies, so each run is emitted as one vectorized block.
    """
    total = comb(n, m)
    stop = min(stop, total)
    if start >= stop:
        return np.empty((0, m), dtype=np.int64)

    first = unrank_combination(start, n, m)
    prefix, lo = first[:-1], first[-1]
    need = stop - start
    prefixes, los, takes = [], [], []
    count = 0
    while prefix is not None and count < need:
        take = min(n - lo, need - count)
        prefixes.append(prefix)
        los.append(lo)
        takes.append(take)
        count += take
        # prefixes range over (m-1)-subsets of range(n-1): the last index must fit after them
        prefix = _next_combination(prefix, n - 1)
        if prefix is not None:
            lo = (prefix[-1] + 1) if prefix else 0

    takes = np.asarray(takes, dtype=np.int64)
    rows = np.repeat(np.asarray(prefixes, dtype=np.int64).reshape(len(takes), m - 1), takes, axis=0)
    offsets = np.arange(count, dtype=np.int64) - np.repeat(np.cumsum(takes) - takes, takes)
    last = np.repeat(np.asarray(los, dtype=np.int64), takes) + offsets
    return np.concatenate([rows, last[:, None]], axis=1)


def chunk_bounds(n: int, m: int, chunk_size: int) -> list:
    """Returns the [start, stop) rank ranges covering all C(n, m) tuples."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive.")
    total = comb(n, m)
    return [(s, min(s + chunk_size, total)) for s in range(0, total, chunk_size)]


def iter_combination_chunks(n: int, m: int, chunk_size: int):
    """Yields every m-subset of range(n), in lexicographic order, in chunks of chunk_size tuples."""
    for start, stop in chunk_bounds(n, m, chunk_size):
        yield combination_chunk(n, m, start, stop)


def sample_index_tuples(n: int, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws `size` uniform m-subsets of range(n), each sorted.

    Indices are distinct within a tuple (Floyd's algorithm, vectorized over
    tuples); tuples are independent of each other, so duplicates may occur.
    """
    if m > n:
        raise ValueError(f"Cannot draw {m} distinct indices from {n}.")
    out = np.empty((size, m), dtype=np.int64)
    for col, j in enumerate(range(n - m, n)):
        t = rng.integers(0, j + 1, size=size)
        if col:
            taken = (out[:, :col] == t[:, None]).any(axis=1)
            t = np.where(taken, j, t)
        out[:, col] = t
    out.sort(axis=1)
    return out
