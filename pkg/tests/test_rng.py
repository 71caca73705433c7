import numpy as np
from hypothesis import given, strategies as st

from arwlab.rng import STREAM_TAPE, derive_seed, mix64, numpy_generator, to_unit, uniform_1, uniform_3, unit

seeds = st.integers(0, 2**63 - 1)
words = st.integers(-10**6, 10**6)


@given(seeds, words, words, words)
def test_python_twin_matches_jitted(seed, a, b, c):
    assert unit(seed, STREAM_TAPE, a, b, c) == uniform_3(seed, STREAM_TAPE, a, b, c)
    assert unit(seed, STREAM_TAPE, a) == uniform_1(seed, STREAM_TAPE, a)


def test_units_are_in_range_and_roughly_uniform():
    u = np.array([unit(5, 1, i) for i in range(20_000)])
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / len(u))


def test_stream_tags_separate_draws():
    assert unit(1, 1, 7) != unit(1, 2, 7)
    assert derive_seed(1, 0) != derive_seed(1, 1)


def test_generator_is_reproducible():
    a = numpy_generator(9, 3).random(5)
    b = numpy_generator(9, 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, numpy_generator(9, 4).random(5))


def test_to_unit_extremes():
    assert to_unit(np.uint64(0)) == 0.0
    assert to_unit(np.uint64(2**64 - 1)) < 1.0
    assert mix64(np.uint64(0)) != np.uint64(0)
