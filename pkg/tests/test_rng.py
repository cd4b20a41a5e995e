import numpy as np
import pytest

from tailstrat.rng import RngStream


def test_same_stream_reproduces_exactly():
    a = RngStream(42).generator().standard_normal(1000)
    b = RngStream(42).generator().standard_normal(1000)
    np.testing.assert_array_equal(a, b)


def test_distinct_seeds_differ():
    a = RngStream(1).generator().standard_normal(100)
    b = RngStream(2).generator().standard_normal(100)
    assert not np.array_equal(a, b)


def test_stream_id_separates_trials():
    a = RngStream(7, stream_id=0).generator().standard_normal(100)
    b = RngStream(7, stream_id=1).generator().standard_normal(100)
    assert not np.array_equal(a, b)


def test_substream_is_deterministic():
    s = RngStream(5, stream_id=3)
    a = s.substream(0, 2).generator().standard_normal(50)
    b = s.substream(0, 2).generator().standard_normal(50)
    np.testing.assert_array_equal(a, b)


def test_substream_paths_do_not_collide():
    s = RngStream(5)
    draws = {}
    for path in [(0,), (1,), (2,), (0, 0), (0, 1), (1, 0), (0, 0, 0)]:
        key = tuple(s.substream(*path).generator().standard_normal(8))
        assert key not in draws.values(), f"collision at {path}"
        draws[path] = key


def test_substream_differs_from_parent():
    s = RngStream(11)
    parent = s.generator().standard_normal(20)
    child = s.substream(0).generator().standard_normal(20)
    assert not np.array_equal(parent, child)


def test_empty_substream_path_rejected():
    with pytest.raises(ValueError):
        RngStream(1).substream()


def test_stream_is_frozen():
    s = RngStream(1)
    with pytest.raises(Exception):
        s.seed = 2


def test_generator_calls_are_independent():
    s = RngStream(9)
    first = s.generator().standard_normal(10)
    second = s.generator().standard_normal(10)
    np.testing.assert_array_equal(first, second)
