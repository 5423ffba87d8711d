"""FiLM-conditioned residual MLP denoiser wrapped in EDM preconditioning.

The time pathway is: Fourier encoding of ln(t)/4 -> two-layer MLP -> one
embedding vector e(t) -> per-block affine projection -> per-channel (alpha,
beta) modulation of that block's features. Overrides can replace either the
embedding a block consumes or its (alpha, beta) pair directly, which is the
entire surface the embedding trainer touches; the rest of the network stays
frozen.

Preconditioning follows the EDM convention:

    D(x, t) = c_skip(t) * x + c_out(t) * F(c_in(t) * x, e(t))

with c_skip = sd^2/(t^2+sd^2), c_out = t*sd/sqrt(t^2+sd^2),
c_in = 1/sqrt(t^2+sd^2) and sd = sigma_data.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream
from .tensor import (
    Tensor,
    affine,
    as_tensor,
    concat,
    cos,
    log,
    matmul,
    mul,
    silu,
    sin,
    slice_,
)


@dataclass(frozen=True)
class NetConfig:
    data_dim: int = 2
    n_blocks: int = 6
    hidden: int = 64
    embed_dim: int = 32
    n_fourier: int = 16
    sigma_data: float = 0.5

    def __post_init__(self):
        for name in ("data_dim", "n_blocks", "hidden", "embed_dim", "n_fourier"):
            if getattr(self, name) <= 0:
                raise ValueError(f"NetConfig.{name} must be positive")
        if self.sigma_data <= 0:
            raise ValueError("NetConfig.sigma_data must be positive")
        if self.embed_dim % 2 != 0:
            raise ValueError("NetConfig.embed_dim must be even")


@dataclass
class FilmParams:
    """Per-channel scale and shift applied to one block's features."""

    alpha: Tensor
    beta: Tensor

    def __post_init__(self):
        self.alpha = as_tensor(self.alpha)
        self.beta = as_tensor(self.beta)
        if self.alpha.data.ndim != 1 or self.alpha.shape != self.beta.shape:
            raise ValueError(
                f"film params must be equal-length vectors, got {self.alpha.shape} and {self.beta.shape}"
            )
        if not (np.all(np.isfinite(self.alpha.data)) and np.all(np.isfinite(self.beta.data))):
            raise ValueError("film params must be finite")


def film(features: Tensor, params: FilmParams) -> Tensor:
    """alpha * features + beta, broadcast over a leading batch extent."""
    features = as_tensor(features)
    n = features.shape[-1]
    if params.alpha.shape != (n,):
        raise ValueError(f"film: {n} feature channels vs {params.alpha.shape[0]} modulation channels")
    return mul(params.alpha, features) + params.beta


class LayerOverride:
    """Optional per-block replacement of the time conditioning.

    Each block may carry at most one of: an embedding vector (run through that
    block's own affine projection) or a direct FilmParams pair. Blocks with
    nothing set, or masked off via `enabled`, fall back to the vanilla e(t).
    """

    def __init__(
        self,
        n_blocks: int,
        embeddings: list[Tensor | None] | None = None,
        films: list[FilmParams | None] | None = None,
        enabled: list[bool] | None = None,
    ):
        self.n_blocks = n_blocks
        self.embeddings = list(embeddings) if embeddings is not None else [None] * n_blocks
        self.films = list(films) if films is not None else [None] * n_blocks
        self.enabled = list(enabled) if enabled is not None else [True] * n_blocks
        if not (len(self.embeddings) == len(self.films) == len(self.enabled) == n_blocks):
            raise ValueError("override lists must all have one entry per block")
        for l in range(n_blocks):
            if self.embeddings[l] is not None and self.films[l] is not None:
                raise ValueError(f"block {l}: embedding and film overrides are mutually exclusive")

    def active(self, l: int) -> bool:
        return self.enabled[l] and (self.embeddings[l] is not None or self.films[l] is not None)


def precondition_coeffs(t: float, sigma_data: float) -> tuple[float, float, float]:
    """(c_skip, c_out, c_in) at noise level t."""
    s2 = sigma_data * sigma_data
    denom = t * t + s2
    return s2 / denom, t * sigma_data / math.sqrt(denom), 1.0 / math.sqrt(denom)


class Denoiser:
    """Frozen-after-training backbone with overridable time conditioning."""

    def __init__(self, cfg: NetConfig, seed: int = 0, weights: dict[str, np.ndarray] | None = None):
        self.cfg = cfg
        self.frozen = False
        # fixed log-spaced Fourier frequencies, not learned
        self.freqs = np.logspace(0.0, 3.0, cfg.n_fourier)
        # constant permutation: (sin block, cos block) -> (sin f0, cos f0, sin f1, ...)
        perm = np.zeros((2 * cfg.n_fourier, 2 * cfg.n_fourier))
        for j in range(cfg.n_fourier):
            perm[j, 2 * j] = 1.0
            perm[cfg.n_fourier + j, 2 * j + 1] = 1.0
        self._interleave = Tensor(perm)
        if weights is None:
            weights = self._init_weights(seed)
        self._params: dict[str, Tensor] = {}
        for name, arr in weights.items():
            self._params[name] = Tensor(np.array(arr, dtype=np.float64), requires_grad=True, name=name)
        expected = [name for name, _ in self._weight_specs()]
        if sorted(self._params) != sorted(expected):
            raise ValueError("weight names do not match the architecture")
        for name, shape in self._weight_specs():
            if self._params[name].shape != shape:
                raise ValueError(f"weight {name}: expected shape {shape}, got {self._params[name].shape}")

    # --- construction -----------------------------------------------------

    def _weight_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        c = self.cfg
        specs: list[tuple[str, tuple[int, ...]]] = [
            ("emb_w1", (2 * c.n_fourier, c.embed_dim)),
            ("emb_b1", (c.embed_dim,)),
            ("emb_w2", (c.embed_dim, c.embed_dim)),
            ("emb_b2", (c.embed_dim,)),
            ("lift_w", (c.data_dim, c.hidden)),
            ("lift_b", (c.hidden,)),
        ]
        for l in range(c.n_blocks):
            specs += [
                (f"blk{l}_in_w", (c.hidden, c.hidden)),
                (f"blk{l}_in_b", (c.hidden,)),
                (f"blk{l}_film_w", (c.embed_dim, 2 * c.hidden)),
                (f"blk{l}_film_b", (2 * c.hidden,)),
                (f"blk{l}_out_w", (c.hidden, c.hidden)),
                (f"blk{l}_out_b", (c.hidden,)),
            ]
        specs += [("head_w", (c.hidden, c.data_dim)), ("head_b", (c.data_dim,))]
        return specs

    def _init_weights(self, seed: int) -> dict[str, np.ndarray]:
        rng = stream(seed, "denoiser-init")
        c = self.cfg
        out: dict[str, np.ndarray] = {}
        for name, shape in self._weight_specs():
            if name.endswith("_b") or name.endswith("b1") or name.endswith("b2"):
                out[name] = np.zeros(shape)
            else:
                fan_in = shape[0]
                out[name] = rng.standard_normal(shape) / math.sqrt(fan_in)
        # The time pathway starts small so training grows only the structure
        # the loss asks for. High-frequency Fourier channels are damped the
        # hardest: at full scale their sub-resolution wiggles dominate the
        # time Jacobian, which caps multistep solver orders on the trained
        # net. Training can still grow any channel it needs.
        damp = 0.5 / (1.0 + self.freqs / math.sqrt(self.freqs[0] * self.freqs[-1]))
        out["emb_w1"] = out["emb_w1"] * np.repeat(damp, 2)[:, None]
        out["emb_w2"] = out["emb_w2"] * 0.1
        for l in range(c.n_blocks):
            # alpha starts near identity, beta near zero
            out[f"blk{l}_film_b"] = np.concatenate([np.ones(c.hidden), np.zeros(c.hidden)])
            out[f"blk{l}_film_w"] = out[f"blk{l}_film_w"] * 0.1
            # residual branches start small so depth does not blow up activations
            out[f"blk{l}_out_w"] = out[f"blk{l}_out_w"] * 0.1
        return out

    def parameters(self) -> list[Tensor]:
        return [self._params[name] for name, _ in self._weight_specs()]

    def weights(self) -> dict[str, np.ndarray]:
        return {name: self._params[name].data.copy() for name, _ in self._weight_specs()}

    def freeze(self) -> "Denoiser":
        for p in self._params.values():
            p.requires_grad = False
            p.data.flags.writeable = False
        self.frozen = True
        return self

    def weights_digest(self) -> str:
        h = hashlib.sha256()
        for name, _ in self._weight_specs():
            h.update(name.encode())
            h.update(self._params[name].data.tobytes())
        return h.hexdigest()

    # --- time pathway -----------------------------------------------------

    def fourier_features(self, t) -> Tensor:
        """sin/cos features of c_noise = ln(t)/4 at the fixed frequencies."""
        tt = t if isinstance(t, Tensor) else Tensor(float(t))
        if np.any(tt.data <= 0):
            raise ValueError(f"time must be positive, got {tt.data}")
        c_noise = log(tt) * 0.25
        ang = mul(c_noise, Tensor(self.freqs))
        return matmul(concat([sin(ang), cos(ang)], axis=-1), self._interleave)

    def embed_time(self, t) -> Tensor:
        """Embedding vector e(t); differentiable in t when t is a Tensor."""
        h = silu(affine(self.fourier_features(t), self._params["emb_w1"], self._params["emb_b1"]))
        return affine(h, self._params["emb_w2"], self._params["emb_b2"])

    def film_affine(self, l: int, embedding: Tensor) -> FilmParams:
        """Block l's affine projection of an embedding into (alpha, beta)."""
        if not 0 <= l < self.cfg.n_blocks:
            raise ValueError(f"block index {l} out of range [0, {self.cfg.n_blocks})")
        ab = affine(as_tensor(embedding), self._params[f"blk{l}_film_w"], self._params[f"blk{l}_film_b"])
        h = self.cfg.hidden
        return FilmParams(alpha=slice_(ab, 0, h), beta=slice_(ab, h, 2 * h))

    def _block_film(self, l: int, t: float, ov: LayerOverride | None, cache: dict) -> FilmParams:
        if ov is not None and ov.active(l):
            if ov.films[l] is not None:
                return ov.films[l]
            return self.film_affine(l, ov.embeddings[l])
        if "e_t" not in cache:
            cache["e_t"] = self.embed_time(t)
        return self.film_affine(l, cache["e_t"])

    # --- forward ----------------------------------------------------------

    def _run(self, x, t: float, ov: LayerOverride | None, capture: bool):
        xt = as_tensor(x)
        if not np.all(np.isfinite(xt.data)):
            raise ValueError("denoiser input must be finite")
        if xt.shape[-1] != self.cfg.data_dim:
            raise ValueError(f"denoiser input has {xt.shape[-1]} channels, expected {self.cfg.data_dim}")
        t = float(t)
        if not (t > 0 and math.isfinite(t)):
            raise ValueError(f"time must be positive and finite, got {t}")
        if ov is not None and ov.n_blocks != self.cfg.n_blocks:
            raise ValueError(f"override covers {ov.n_blocks} blocks, network has {self.cfg.n_blocks}")

        c_skip, c_out, c_in = precondition_coeffs(t, self.cfg.sigma_data)
        cache: dict = {}
        features: list[tuple[Tensor, Tensor]] = []
        h = affine(xt * c_in, self._params["lift_w"], self._params["lift_b"])
        for l in range(self.cfg.n_blocks):
            fp = self._block_film(l, t, ov, cache)
            pre = affine(h, self._params[f"blk{l}_in_w"], self._params[f"blk{l}_in_b"])
            post = film(pre, fp)
            if capture:
                features.append((pre, post))
            h = h + affine(silu(post), self._params[f"blk{l}_out_w"], self._params[f"blk{l}_out_b"])
        raw = affine(h, self._params["head_w"], self._params["head_b"])
        out = xt * c_skip + raw * c_out
        return features, out

    def forward(self, x, t: float) -> Tensor:
        """Denoised prediction D(x, t) under the vanilla time conditioning."""
        return self._run(x, t, None, capture=False)[1]

    def forward_per_sample(self, x, sigmas) -> Tensor:
        """Denoised predictions for a batch carrying one noise level per row.

        Same weights and arithmetic as forward, vectorized over the noise
        level. Pretraining uses this path so every minibatch spans the whole
        noise law instead of pinning the batch to a single scalar level.
        Vanilla conditioning only; overrides are a scalar-time concept.
        """
        xt = as_tensor(x)
        sig = np.asarray(sigmas, dtype=np.float64)
        if xt.data.ndim != 2 or xt.shape[-1] != self.cfg.data_dim:
            raise ValueError(f"expected (batch, {self.cfg.data_dim}) input, got {xt.shape}")
        if sig.shape != (xt.shape[0],):
            raise ValueError(f"expected {xt.shape[0]} noise levels, got shape {sig.shape}")
        if not (np.all(np.isfinite(sig)) and np.all(sig > 0)):
            raise ValueError("noise levels must be positive and finite")
        if not np.all(np.isfinite(xt.data)):
            raise ValueError("denoiser input must be finite")
        sd = self.cfg.sigma_data
        denom = sig * sig + sd * sd
        c_skip = Tensor((sd * sd / denom)[:, None])
        c_out = Tensor((sig * sd / np.sqrt(denom))[:, None])
        c_in = Tensor((1.0 / np.sqrt(denom))[:, None])
        ang = mul(Tensor(np.log(sig)[:, None] * 0.25), Tensor(self.freqs))
        feats = matmul(concat([sin(ang), cos(ang)], axis=-1), self._interleave)
        e = affine(
            silu(affine(feats, self._params["emb_w1"], self._params["emb_b1"])),
            self._params["emb_w2"],
            self._params["emb_b2"],
        )
        h = affine(mul(xt, c_in), self._params["lift_w"], self._params["lift_b"])
        for l in range(self.cfg.n_blocks):
            ab = affine(e, self._params[f"blk{l}_film_w"], self._params[f"blk{l}_film_b"])
            pre = affine(h, self._params[f"blk{l}_in_w"], self._params[f"blk{l}_in_b"])
            post = mul(slice_(ab, 0, self.cfg.hidden), pre) + slice_(ab, self.cfg.hidden, 2 * self.cfg.hidden)
            h = h + affine(silu(post), self._params[f"blk{l}_out_w"], self._params[f"blk{l}_out_b"])
        raw = affine(h, self._params["head_w"], self._params["head_b"])
        return mul(xt, c_skip) + mul(raw, c_out)

    def forward_with_overrides(self, x, t: float, ov: LayerOverride | None) -> Tensor:
        """Denoised prediction with per-block conditioning overrides."""
        return self._run(x, t, ov, capture=False)[1]

    def capture_features(self, x, t: float, ov: LayerOverride | None = None):
        """Per-block (pre-modulation, post-modulation) features plus the output.

        Capturing changes nothing: the returned output is the same op-for-op
        computation as forward.
        """
        features, out = self._run(x, t, ov, capture=True)
        return features, out

    def __call__(self, x, t: float, ov: LayerOverride | None = None) -> Tensor:
        return self._run(x, t, ov, capture=False)[1]
