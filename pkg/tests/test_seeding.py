import numpy as np

from occlink.seeding import MASK64, gaussian_noise, mix64, splitmix64, uniform_stream


def test_splitmix64_reference_value():
    # first output of the reference SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_mix64_is_order_sensitive_and_64_bit():
    assert mix64(1, 2, 3) != mix64(1, 3, 2)
    assert 0 <= mix64(-1, 2**70) <= MASK64
    assert mix64(7, 0, 0) == mix64(7, 0, 0)


def test_uniform_stream_range_and_keys():
    u = uniform_stream(3, 0, 10_000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01
    assert not np.array_equal(u[:10], uniform_stream(3, 1, 10))
    assert np.array_equal(u[:10], uniform_stream(3, 0, 10))


def test_gaussian_moments():
    z = gaussian_noise(11, 0, (200_000,), 2.5)
    assert abs(z.mean()) < 0.02
    assert abs(z.std() - 2.5) < 0.02


def test_gaussian_zero_sigma():
    assert not gaussian_noise(1, 0, (4, 3), 0.0).any()


def test_gaussian_shape_and_odd_count():
    assert gaussian_noise(1, 0, (3, 5), 1.0).shape == (3, 5)
