import numpy as np
import pytest

from ustatlab.rng import ROLES, stream, stream_key


def test_same_key_gives_identical_draws():
    a = stream(11, 3, "path", 200).standard_normal(1000)
    b = stream(11, 3, "path", 200).standard_normal(1000)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("other", [(12, 3, "path", 200), (11, 4, "path", 200),
                                   (11, 3, "oracle", 200), (11, 3, "path", 201)])
def test_distinct_keys_give_distinct_draws(other):
    a = stream(11, 3, "path", 200).standard_normal(100)
    b = stream(*other).standard_normal(100)
    assert not np.array_equal(a, b)


def test_stream_key_layout():
    assert stream_key(5, 2, "subsets", 9) == (5, 2, ROLES["subsets"], 9)


def test_unknown_role_and_negative_keys_are_rejected():
    with pytest.raises(ValueError):
        stream(0, 0, "bootstrap")
    with pytest.raises(ValueError):
        stream(-1, 0, "path")


def test_streams_use_philox():
    assert isinstance(stream(0, 0, "probe").bit_generator, np.random.Philox)
