"""Synthetic 2-D Gaussian-mixture data and its closed-form denoiser.

The mixture admits an exact sampler and an exact posterior mean
E[x0 | x0 + sigma*n = x], so the learned backbone and the samplers can be
checked against ground truth instead of against another approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import stream


def circle_means(k: int = 8, radius: float = 8.0) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(k) / k
    return radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass(frozen=True)
class GmmSpec:
    means: np.ndarray = field(default_factory=circle_means, repr=False)
    std: float = 0.5
    weights: np.ndarray | None = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 2:
            raise ValueError("means must be a (K, dim) array")
        object.__setattr__(self, "means", means)
        if self.std <= 0:
            raise ValueError("component std must be positive")
        w = self.weights
        if w is None:
            w = np.full(len(means), 1.0 / len(means))
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (len(means),) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1, one per component")
        object.__setattr__(self, "weights", w)

    @property
    def n_components(self) -> int:
        return len(self.means)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.means


def sample_gmm(spec: GmmSpec, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """n i.i.d. mixture draws, deterministic per seed."""
    if n <= 0:
        raise ValueError(f"need n > 0, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), "gmm-sample")
    comp = rng.choice(spec.n_components, size=n, p=spec.weights)
    return spec.means[comp] + spec.std * rng.standard_normal((n, spec.dim))


def analytic_denoiser(spec: GmmSpec, x: np.ndarray, sigma: float) -> np.ndarray:
    """Exact posterior mean E[x0 | x0 + sigma*n = x] under the mixture prior.

    With shared isotropic component std s, the posterior over components is a
    softmax of -||x - mu_k||^2 / (2 (s^2 + sigma^2)) plus log weights, and each
    component's posterior mean is the precision-weighted blend
    (s^2 x + sigma^2 mu_k) / (s^2 + sigma^2). Log-sum-exp keeps the weights
    finite at any noise level.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    s2 = spec.std**2
    total = s2 + sigma * sigma
    # (n, K) squared distances to the component means
    d2 = ((pts[:, None, :] - spec.means[None, :, :]) ** 2).sum(axis=2)
    logw = np.log(spec.weights)[None, :] - d2 / (2.0 * total)
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    mu_post = w @ spec.means
    out = (s2 * pts + sigma * sigma * mu_post) / total
    return out[0] if single else out
