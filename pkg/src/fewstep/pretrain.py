"""Backbone pretraining with the EDM denoising objective.

Minimizes lambda(sigma) * ||D(x0 + sigma*n, sigma) - x0||^2 with
lambda(sigma) = (sigma^2 + sd^2) / (sigma * sd)^2 over noise levels drawn
log-normally and clamped to the sampling range. The returned network is
frozen; later stages only ever optimize conditioning overrides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoiser import Denoiser, NetConfig
from .mixture import GmmSpec, sample_gmm
from .rng import stream
from .tensor import Adam, Tensor, backward, square, tape, tmean, tsum

SIGMA_MIN = 0.002
SIGMA_MAX = 80.0


@dataclass(frozen=True)
class TrainBackboneConfig:
    n_samples: int = 4096
    epochs: int = 60
    batch: int = 128
    lr: float = 3e-3
    sigma_log_mean: float = math.log(0.5)
    sigma_log_std: float = 1.2
    seed: int = 0

    def __post_init__(self):
        if self.n_samples <= 0 or self.batch <= 0 or self.epochs < 0:
            raise ValueError("counts must be positive (epochs may be zero)")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def train_backbone(
    spec: GmmSpec,
    cfg: TrainBackboneConfig,
    net_cfg: NetConfig | None = None,
) -> tuple[Denoiser, np.ndarray]:
    """Train a fresh denoiser on mixture data; returns (frozen net, loss curve)."""
    net_cfg = net_cfg or NetConfig(data_dim=spec.dim)
    net = Denoiser(net_cfg, seed=cfg.seed)
    data = sample_gmm(spec, cfg.n_samples, stream(cfg.seed, "pretrain-data"))
    rng_sigma = stream(cfg.seed, "pretrain-sigma")
    rng_noise = stream(cfg.seed, "pretrain-noise")
    rng_perm = stream(cfg.seed, "pretrain-shuffle")
    opt = Adam(net.parameters(), lr=cfg.lr)
    sd = net_cfg.sigma_data
    losses: list[float] = []
    n_iters = cfg.epochs * max(1, cfg.n_samples // cfg.batch)
    it = 0
    for epoch in range(cfg.epochs):
        perm = rng_perm.permutation(cfg.n_samples)
        for lo in range(0, cfg.n_samples - cfg.batch + 1, cfg.batch):
            x0 = data[perm[lo : lo + cfg.batch]]
            # one noise level per sample, so each update sees the whole law;
            # a shared per-batch level leaves the high-frequency embedding
            # weights a random walk that never settles
            sigma = np.clip(
                np.exp(cfg.sigma_log_mean + cfg.sigma_log_std * rng_sigma.standard_normal(len(x0))),
                SIGMA_MIN,
                SIGMA_MAX,
            )
            noise = rng_noise.standard_normal(x0.shape)
            xt = x0 + sigma[:, None] * noise
            lam = (sigma * sigma + sd * sd) / (sigma * sd) ** 2
            with tape():
                pred = net.forward_per_sample(xt, sigma)
                loss = tmean(tsum(square(pred - Tensor(x0)), axis=1) * Tensor(lam))
                value = loss.item()
                if not math.isfinite(value):
                    raise FloatingPointError(f"pretraining diverged at epoch {epoch}")
                backward(loss)
            # linear decay to a fiftieth of the starting rate over the run;
            # the residual noise ball around the optimum scales with the
            # final rate, and the time pathway is the part that feels it
            frac = it / max(1, n_iters - 1)
            opt.step(lr=cfg.lr * (1.0 - 0.98 * frac))
            opt.zero_grad()
            losses.append(value)
            it += 1
    net.freeze()
    return net, np.asarray(losses)
