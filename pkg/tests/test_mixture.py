"""Ground-truth mixture: sampling and the closed-form posterior-mean denoiser."""

import numpy as np
import pytest

from fewstep.mixture import GmmSpec, analytic_denoiser, circle_means, sample_gmm
from fewstep.rng import stream


def test_circle_means_layout():
    m = circle_means(8, 8.0)
    assert m.shape == (8, 2)
    np.testing.assert_allclose(np.linalg.norm(m, axis=1), 8.0, rtol=1e-12)
    np.testing.assert_allclose(m[0], [8.0, 0.0], atol=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        GmmSpec(std=0.0)
    with pytest.raises(ValueError):
        GmmSpec(weights=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        GmmSpec(means=circle_means(2), weights=np.array([1.2, -0.2]))


def test_single_tight_component_collapses_to_its_mean():
    spec = GmmSpec(means=np.array([[3.0, -1.0]]), std=1e-12)
    pts = sample_gmm(spec, 50, seed=0)
    np.testing.assert_allclose(pts, np.tile([3.0, -1.0], (50, 1)), atol=1e-9)


def test_empirical_mean_within_lln_bound():
    spec = GmmSpec()
    n = 100_000
    pts = sample_gmm(spec, n, seed=3)
    # per-coordinate std of the mixture: radius^2/2 + s^2 around a zero mean
    coord_std = np.sqrt(8.0**2 / 2 + 0.5**2)
    bound = 3.0 * coord_std / np.sqrt(n)
    assert np.all(np.abs(pts.mean(axis=0) - spec.mean()) < bound)


def test_same_seed_same_batch():
    spec = GmmSpec()
    a = sample_gmm(spec, 64, seed=9)
    b = sample_gmm(spec, 64, seed=9)
    np.testing.assert_array_equal(a, b)
    c = sample_gmm(spec, 64, seed=10)
    assert not np.array_equal(a, c)


def test_generator_seeding_matches_stream():
    spec = GmmSpec()
    a = sample_gmm(spec, 16, seed=5)
    b = sample_gmm(spec, 16, stream(5, "gmm-sample"))
    np.testing.assert_array_equal(a, b)


def test_single_gaussian_posterior_mean():
    spec = GmmSpec(means=np.array([[0.0, 0.0]]), std=1.0)
    out = analytic_denoiser(spec, np.array([2.0, 0.0]), 1.0)
    np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-12)


def test_no_noise_limit_returns_x():
    spec = GmmSpec()
    x = np.array([[1.3, -0.4], [5.0, 5.0]])
    out = analytic_denoiser(spec, x, 1e-9)
    np.testing.assert_allclose(out, x, atol=1e-6)


def test_high_noise_symmetric_circle_shrinks_to_origin():
    # oracle: direct evaluation of the posterior-mean formula without the
    # log-sum-exp path; at x=(1,1), sigma=80 the shrunk output has norm 7.1e-3
    spec = GmmSpec()
    x = np.array([1.0, 1.0])
    s2, sig2 = spec.std**2, 80.0**2
    d2 = ((x - spec.means) ** 2).sum(axis=1)
    w = np.exp(-(d2 - d2.max()) / (2 * (s2 + sig2)))
    w /= w.sum()
    expected = (s2 * x + sig2 * (w @ spec.means)) / (s2 + sig2)

    out = analytic_denoiser(spec, x, 80.0)
    np.testing.assert_allclose(out, expected, atol=1e-12)
    assert np.linalg.norm(out) == pytest.approx(0.007125753214802673, rel=1e-9)
    assert np.linalg.norm(out) < 1e-2


def test_finite_everywhere_even_far_from_modes():
    spec = GmmSpec()
    far = np.array([[1e6, -1e6], [0.0, 1e8]])
    for sigma in (0.002, 1.0, 80.0):
        assert np.all(np.isfinite(analytic_denoiser(spec, far, sigma)))


def test_single_component_shrinkage_is_monotone_in_sigma():
    spec = GmmSpec(means=np.array([[0.0, 0.0]]), std=1.0)
    x = np.array([4.0, 0.0])
    outs = [analytic_denoiser(spec, x, s)[0] for s in np.logspace(-2.7, 1.9, 24)]
    assert all(a >= b - 1e-12 for a, b in zip(outs, outs[1:]))
    assert outs[0] == pytest.approx(4.0, abs=1e-3)
    assert outs[-1] == pytest.approx(0.0, abs=1e-2)


def test_batched_and_single_point_agree():
    spec = GmmSpec()
    x = np.array([2.0, -3.0])
    single = analytic_denoiser(spec, x, 0.7)
    batched = analytic_denoiser(spec, x[None, :], 0.7)
    np.testing.assert_array_equal(single, batched[0])
