"""Counter-based random streams for reproducible parallel replication.

Every random draw in ustatlab comes from a stream keyed by
``(seed, replication, role, *extra)``. Streams are built on numpy's Philox
bit generator, so two streams with distinct keys never overlap and a given
key produces the same numbers no matter how many worker threads run.
"""

import numpy as np

ROLES = {
    "path": 1,
    "oracle": 2,
    "subsets": 3,
    "probe": 4,
    "sigma": 5,
    "centering": 6,
}


def stream_key(seed: int, replication: int, role: str, *extra: int) -> tuple:
    """Returns the integer key identifying a stream."""
    if role not in ROLES:
        raise ValueError(f"Unknown stream role '{role}'. Expected one of {sorted(ROLES)}.")
    if seed < 0 or replication < 0 or any(e < 0 for e in extra):
        raise ValueError("Stream key components must be non-negative integers.")
    return (int(seed), int(replication), ROLES[role], *(int(e) for e in extra))


def stream(seed: int, replication: int, role: str, *extra: int) -> np.random.Generator:
    """Creates the Philox-backed generator for a stream key."""
    seed_seq = np.random.SeedSequence(list(stream_key(seed, replication, role, *extra)))
    return np.random.Generator(np.random.Philox(seed_seq))
