"""Two-sample distance statistics against brute-force oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fewstep.metrics import energy_distance, sliced_wasserstein
from fewstep.rng import stream


def ed_bruteforce(a, b):
    """Double-loop energy distance with all-pairs within means."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)

    def mean_dist(xs, ys):
        total = 0.0
        for x in xs:
            for y in ys:
                total += float(np.linalg.norm(x - y))
        return total / (len(xs) * len(ys))

    return 2.0 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)


def w1_bruteforce(xs, ys):
    """1-D W1 as the integral of |F_X^{-1} - F_Y^{-1}| on a fine grid."""
    xs = np.sort(xs)
    ys = np.sort(ys)
    u = (np.arange(200000) + 0.5) / 200000
    qx = xs[np.minimum((u * len(xs)).astype(int), len(xs) - 1)]
    qy = ys[np.minimum((u * len(ys)).astype(int), len(ys) - 1)]
    return float(np.abs(qx - qy).mean())


def test_energy_identical_sets_zero():
    pts = stream(0, "test").standard_normal((37, 2))
    assert energy_distance(pts, pts) == 0.0
    assert energy_distance(pts, pts.copy()) == 0.0


def test_energy_two_point_masses():
    a = np.array([[0.0, 0.0]])
    b = np.array([[3.0, 4.0]])
    assert energy_distance(a, b) == 10.0


def test_energy_matches_bruteforce():
    rng = stream(1, "test")
    a = rng.standard_normal((100, 2))
    b = rng.standard_normal((80, 2)) + 0.5
    assert_allclose(energy_distance(a, b), ed_bruteforce(a, b), rtol=0, atol=1e-12)


def test_energy_blocked_path_matches_bruteforce():
    # Sets larger than one kernel block exercise the accumulation loop.
    from fewstep import metrics as m

    rng = stream(2, "test")
    a = rng.standard_normal((50, 3))
    b = rng.standard_normal((120, 3))
    old = m._BLOCK
    m._BLOCK = 16
    try:
        blocked = energy_distance(a, b)
    finally:
        m._BLOCK = old
    assert_allclose(blocked, ed_bruteforce(a, b), rtol=0, atol=1e-12)


def test_energy_symmetry_exact():
    rng = stream(3, "test")
    for n, mm in [(40, 40), (40, 70), (1, 9)]:
        a = rng.standard_normal((n, 2))
        b = rng.standard_normal((mm, 2)) + 1.0
        assert energy_distance(a, b) == energy_distance(b, a)


def test_energy_nonnegative_on_draws():
    rng = stream(4, "test")
    for _ in range(30):
        a = rng.standard_normal((rng.integers(1, 60), 2))
        b = rng.standard_normal((rng.integers(1, 60), 2))
        assert energy_distance(a, b) >= 0.0


def test_energy_single_point_within_convention():
    # n == 1: the within term is a mean over the lone zero-distance pair.
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 0.0], [2.0, 0.0]])
    cross = 0.5 * (1.0 + 1.0)
    within_b = (0.0 + 2.0 + 2.0 + 0.0) / 4.0
    assert energy_distance(a, b) == pytest.approx(2 * cross - within_b, abs=1e-15)


def test_energy_detects_shift():
    rng = stream(5, "test")
    a = rng.standard_normal((200, 2))
    b = rng.standard_normal((200, 2))
    near = energy_distance(a, b)
    far = energy_distance(a, b + 3.0)
    assert far > near + 1.0


def test_energy_input_validation():
    with pytest.raises(ValueError, match="non-empty"):
        energy_distance(np.empty((0, 2)), np.ones((3, 2)))
    with pytest.raises(ValueError, match="point set"):
        energy_distance(np.ones(5), np.ones((3, 2)))


def test_sliced_equal_sizes_matches_sorted_diff():
    rng = stream(6, "test")
    a = rng.standard_normal((64, 2))
    b = rng.standard_normal((64, 2))
    got = sliced_wasserstein(a, b, n_proj=8, seed=3)
    dirs = stream(3, "sliced-w1").standard_normal((8, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    want = np.mean(
        [np.abs(np.sort(a @ v) - np.sort(b @ v)).mean() for v in dirs]
    )
    assert_allclose(got, want, rtol=0, atol=1e-14)


def test_sliced_unequal_sizes_matches_quantile_integral():
    rng = stream(7, "test")
    a = rng.standard_normal((48, 2))
    b = rng.standard_normal((31, 2)) + 0.3
    got = sliced_wasserstein(a, b, n_proj=4, seed=11)
    dirs = stream(11, "sliced-w1").standard_normal((4, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    want = np.mean([w1_bruteforce(a @ v, b @ v) for v in dirs])
    assert_allclose(got, want, rtol=0, atol=2e-5)


def test_sliced_identical_sets_zero():
    pts = stream(8, "test").standard_normal((25, 2))
    assert sliced_wasserstein(pts, pts, n_proj=16, seed=0) == 0.0


def test_sliced_symmetry_and_determinism():
    rng = stream(9, "test")
    a = rng.standard_normal((20, 2))
    b = rng.standard_normal((33, 2))
    x = sliced_wasserstein(a, b, n_proj=12, seed=5)
    assert x == sliced_wasserstein(b, a, n_proj=12, seed=5)
    assert x == sliced_wasserstein(a, b, n_proj=12, seed=5)
    assert x != sliced_wasserstein(a, b, n_proj=12, seed=6)


def test_sliced_translation_lower_bound():
    # A pure shift costs at least |shift| E|cos angle| along each direction.
    rng = stream(10, "test")
    a = rng.standard_normal((100, 2))
    b = a + np.array([2.0, 0.0])
    v = sliced_wasserstein(a, b, n_proj=256, seed=1)
    assert 0.8 < v < 2.0


def test_sliced_rejects_bad_n_proj():
    a = np.ones((4, 2))
    with pytest.raises(ValueError, match="n_proj"):
        sliced_wasserstein(a, a, n_proj=0)
