"""Diagnostics for the trained sampler.

Covers conditioning-time sweeps (which single evaluation time best matches a
reference step, overall and per block), principal-component summaries of
feature and embedding sets, a per-channel affine capacity probe, subset
enable/disable ablations of the trained bank, and transfer of a coarse bank
onto refined schedules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoiser import Denoiser, FilmParams, LayerOverride
from .distill import EmbeddingBank
from .metrics import energy_distance, sliced_wasserstein
from .schedule import Schedule, make_schedule, refine_schedule
from .solvers import sample
from .teacher import TeacherSet
from .tensor import Adam, Tensor, absolute, backward, tape, tmean


def _as_array(v) -> np.ndarray:
    return v.data if isinstance(v, Tensor) else np.asarray(v, dtype=np.float64)


# --- principal components ---------------------------------------------------


@dataclass(frozen=True)
class PcaResult:
    ratios: np.ndarray
    cumulative: np.ndarray

    def components_for(self, frac: float) -> int:
        """Smallest component count whose cumulative ratio reaches frac."""
        return int(np.searchsorted(self.cumulative, frac - 1e-12) + 1)


def pca(points) -> PcaResult:
    """Explained-variance ratios of a point set, descending.

    Args:
        points: (n, dim) array, n >= 2.

    Returns:
        PcaResult with ratios summing to 1 and a non-decreasing cumulative.

    Raises:
        ValueError: fewer than two points, or all points identical.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError(f"pca: need at least 2 points, got shape {pts.shape}")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / (len(pts) - 1)
    eig = np.linalg.eigvalsh(cov)[::-1]
    eig = np.clip(eig, 0.0, None)
    total = eig.sum()
    if total <= 1e-300:
        raise ValueError("pca: zero variance (all points identical)")
    ratios = eig / total
    return PcaResult(ratios=ratios, cumulative=np.cumsum(ratios))


# --- conditioning-time sweeps -------------------------------------------------


@dataclass
class SweepResult:
    step: int
    grid: np.ndarray = field(repr=False)
    mean_dists: np.ndarray = field(repr=False)
    per_seed_dists: np.ndarray = field(repr=False)  # (n_grid, n_seeds)
    tau_star: float
    interior: bool
    t_cur: float
    t_next: float
    layer: int | None = None

    def per_seed_tau_star(self) -> np.ndarray:
        return self.grid[np.argmin(self.per_seed_dists, axis=0)]


def default_sweep_grid(n: int = 121, sigma_min: float = 0.002, sigma_max: float = 80.0) -> np.ndarray:
    return make_schedule("polynomial", n, sigma_min, sigma_max).times


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("sweep grid is empty")
    if grid.size > 1 and not np.all(np.diff(grid) < 0):
        raise ValueError("sweep grid must be strictly decreasing")
    if np.any(grid <= 0):
        raise ValueError("sweep grid times must be positive")
    return grid


def time_sweep(denoiser, teachers: TeacherSet, step: int, grid=None) -> SweepResult:
    """Distance to the teacher next-state as the evaluation time is swept.

    The update keeps the interval coefficients (t_cur -> t_next) fixed and
    only moves the time the denoiser is conditioned on; the reported minimizer
    is the best single conditioning time for this step.
    """
    student = teachers.student
    if not 0 <= step < student.n_intervals:
        raise ValueError(f"step {step} out of range [0, {student.n_intervals})")
    grid = _check_grid(default_sweep_grid() if grid is None else grid)
    t_cur, t_next = float(student.times[step]), float(student.times[step + 1])
    x_cur = teachers.states[:, step, :]
    target = teachers.states[:, step + 1, :]
    dists = np.empty((len(grid), len(x_cur)))
    for j, tau in enumerate(grid):
        den = _as_array(denoiser(x_cur, float(tau), None))
        # mirrors ddim_step's arithmetic so tau = t_cur matches it bitwise
        x_next = x_cur + (t_next - t_cur) * ((x_cur - den) * (1.0 / t_cur))
        dists[j] = np.linalg.norm(x_next - target, axis=1)
    mean_d = dists.mean(axis=1)
    j_star = int(np.argmin(mean_d))
    tau_star = float(grid[j_star])
    return SweepResult(
        step=step,
        grid=grid,
        mean_dists=mean_d,
        per_seed_dists=dists,
        tau_star=tau_star,
        interior=bool(t_next < tau_star < t_cur),
        t_cur=t_cur,
        t_next=t_next,
    )


def layer_time_sweep(denoiser: Denoiser, teachers: TeacherSet, step: int, layer: int, grid=None) -> SweepResult:
    """Per-block sweep: only block `layer`'s conditioning moves.

    The other blocks stay conditioned at t_cur; the distance compares block
    `layer`'s modulated feature against the same block's feature on the
    teacher state at (t_next, t_next).
    """
    student = teachers.student
    if not 0 <= step < student.n_intervals:
        raise ValueError(f"step {step} out of range [0, {student.n_intervals})")
    n_blocks = denoiser.cfg.n_blocks
    if not 0 <= layer < n_blocks:
        raise ValueError(f"layer {layer} out of range [0, {n_blocks})")
    grid = _check_grid(default_sweep_grid() if grid is None else grid)
    t_cur, t_next = float(student.times[step]), float(student.times[step + 1])
    x_cur = teachers.states[:, step, :]
    ref_feats, _ = denoiser.capture_features(teachers.states[:, step + 1, :], t_next)
    ref = ref_feats[layer][1].data
    dists = np.empty((len(grid), len(x_cur)))
    for j, tau in enumerate(grid):
        embs: list = [None] * n_blocks
        embs[layer] = denoiser.embed_time(float(tau))
        ov = LayerOverride(n_blocks, embeddings=embs)
        feats, _ = denoiser.capture_features(x_cur, t_cur, ov)
        dists[j] = np.linalg.norm(feats[layer][1].data - ref, axis=1)
    mean_d = dists.mean(axis=1)
    j_star = int(np.argmin(mean_d))
    tau_star = float(grid[j_star])
    return SweepResult(
        step=step,
        grid=grid,
        mean_dists=mean_d,
        per_seed_dists=dists,
        tau_star=tau_star,
        interior=bool(t_next < tau_star < t_cur),
        t_cur=t_cur,
        t_next=t_next,
        layer=layer,
    )


# --- feature trajectories -----------------------------------------------------


class _CapturingDenoiser:
    """Denoiser wrapper that records every sample's pre-modulation features."""

    def __init__(self, net: Denoiser):
        self.net = net
        self.cfg = net.cfg
        self.recorded: list[list[np.ndarray]] = [[] for _ in range(net.cfg.n_blocks)]

    def __call__(self, x, t, ov=None):
        feats, out = self.net.capture_features(x, t, ov)
        for l, (pre, _post) in enumerate(feats):
            self.recorded[l].append(pre.data.copy())
        return out


def feature_trajectory_pca(
    denoiser: Denoiser,
    schedule: Schedule,
    kind: str = "ipndm",
    seed: int = 0,
    n: int = 64,
) -> list[PcaResult]:
    """One PCA per block over that block's features along a dense rollout.

    Every solver evaluation contributes one point per block and per sampled
    trajectory, so an N-point schedule with n samples yields (N-1)*n points.
    """
    wrapper = _CapturingDenoiser(denoiser)
    sample(kind, schedule, wrapper, seed=seed, n=n)
    return [pca(np.vstack(rows)) for rows in wrapper.recorded]


# --- per-channel affine capacity probe ----------------------------------------


@dataclass
class FilmCapacityResult:
    pre_l1: float
    post_l1: float
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)


def film_capacity(
    teacher_feats,
    student_feats,
    init_alpha,
    init_beta,
    iters: int = 200,
    lr: float = 0.05,
) -> FilmCapacityResult:
    """How far a per-channel affine can pull student features toward a target.

    pre_l1 is the mean absolute error at the provided starting (alpha, beta);
    the fit runs Adam on the L1 objective from the per-channel least-squares
    solution and returns the best parameters seen (including the start), so
    post_l1 <= pre_l1 always holds.
    """
    teacher = np.asarray(teacher_feats, dtype=np.float64)
    student = np.asarray(student_feats, dtype=np.float64)
    if teacher.shape != student.shape or teacher.ndim != 2:
        raise ValueError(
            f"film_capacity: feature shapes must match, got {teacher.shape} and {student.shape}"
        )
    init_alpha = np.asarray(init_alpha, dtype=np.float64)
    init_beta = np.asarray(init_beta, dtype=np.float64)
    if init_alpha.shape != (teacher.shape[1],) or init_beta.shape != (teacher.shape[1],):
        raise ValueError("film_capacity: init params must be one value per channel")

    def l1(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.abs(teacher - (a * student + b)).mean())

    pre = l1(init_alpha, init_beta)
    # per-channel least-squares warm start
    s_mean = student.mean(axis=0)
    y_mean = teacher.mean(axis=0)
    s_var = ((student - s_mean) ** 2).mean(axis=0)
    cov = ((student - s_mean) * (teacher - y_mean)).mean(axis=0)
    a_ls = np.where(s_var > 1e-30, cov / np.where(s_var > 1e-30, s_var, 1.0), 0.0)
    b_ls = y_mean - a_ls * s_mean

    best = (pre, init_alpha.copy(), init_beta.copy())
    for a, b in ((a_ls, b_ls),):
        v = l1(a, b)
        if v < best[0]:
            best = (v, a.copy(), b.copy())

    alpha = Tensor(a_ls.copy(), requires_grad=True, name="alpha")
    beta = Tensor(b_ls.copy(), requires_grad=True, name="beta")
    opt = Adam([alpha, beta], lr=lr)
    target = Tensor(teacher)
    feats = Tensor(student)
    for _ in range(iters):
        with tape():
            loss = tmean(absolute(target - (alpha * feats + beta)))
            backward(loss)
        opt.step()
        opt.zero_grad()
        v = l1(alpha.data, beta.data)
        if v < best[0]:
            best = (v, alpha.data.copy(), beta.data.copy())
    return FilmCapacityResult(pre_l1=pre, post_l1=best[0], alpha=best[1], beta=best[2])


@dataclass
class CapacitySweep:
    taus: np.ndarray
    pre: np.ndarray
    post: np.ndarray

    @property
    def pre_mean(self) -> float:
        return float(self.pre.mean())

    @property
    def post_mean(self) -> float:
        return float(self.post.mean())

    @property
    def pre_var(self) -> float:
        return float(self.pre.var())

    @property
    def post_var(self) -> float:
        return float(self.post.var())


def film_capacity_sweep(
    denoiser: Denoiser,
    teachers: TeacherSet,
    step: int,
    layer: int,
    n_taus: int = 16,
    iters: int = 150,
    lr: float = 0.05,
) -> CapacitySweep:
    """Capacity probe across conditioning times strictly inside one interval.

    For each tau the target is block `layer`'s modulated feature at
    conditioning tau (same states), the source is the block's pre-modulation
    feature at t_cur, and the starting affine is the block's own vanilla
    (alpha, beta) at t_cur.
    """
    student = teachers.student
    t_cur, t_next = float(student.times[step]), float(student.times[step + 1])
    x_cur = teachers.states[:, step, :]
    taus = np.geomspace(t_cur, t_next, n_taus + 2)[1:-1]
    feats, _ = denoiser.capture_features(x_cur, t_cur)
    source = feats[layer][0].data
    own = denoiser.film_affine(layer, denoiser.embed_time(t_cur))
    a0, b0 = own.alpha.data, own.beta.data
    pre = np.empty(len(taus))
    post = np.empty(len(taus))
    for j, tau in enumerate(taus):
        tf, _ = denoiser.capture_features(x_cur, float(tau))
        res = film_capacity(tf[layer][1].data, source, a0, b0, iters=iters, lr=lr)
        pre[j] = res.pre_l1
        post[j] = res.post_l1
    return CapacitySweep(taus=taus, pre=pre, post=post)


# --- embedding-space spread ----------------------------------------------------


@dataclass
class EmbeddingPcaResult:
    vanilla_embeddings: PcaResult
    vanilla_films: PcaResult
    bank_embeddings: PcaResult | None
    bank_films: PcaResult | None


def embedding_pca(denoiser: Denoiser, bank: EmbeddingBank | None = None, n_grid: int = 121) -> EmbeddingPcaResult:
    """Spread of vanilla conditioning vs a trained bank's conditioning.

    The vanilla arm evaluates e(t) (and every block's (alpha, beta)) over a
    dense time grid; the bank arm uses the bank's stored vectors and their
    generated modulation parameters.
    """
    times = default_sweep_grid(n_grid)
    embs = np.stack([denoiser.embed_time(float(t)).data for t in times])
    n_blocks = denoiser.cfg.n_blocks
    film_rows = []
    for t, e in zip(times, embs):
        for l in range(n_blocks):
            fp = denoiser.film_affine(l, Tensor(e))
            film_rows.append(np.concatenate([fp.alpha.data, fp.beta.data]))
    result = EmbeddingPcaResult(
        vanilla_embeddings=pca(embs),
        vanilla_films=pca(np.stack(film_rows)),
        bank_embeddings=None,
        bank_films=None,
    )
    if bank is None:
        return result
    emb_rows = []
    bank_film_rows = []
    for i in range(bank.n_steps):
        entry = bank.steps[i]
        if bank.variant == "multi-layer":
            for l, vec in enumerate(entry):
                emb_rows.append(vec.data.copy())
                fp = denoiser.film_affine(l, Tensor(vec.data))
                bank_film_rows.append(np.concatenate([fp.alpha.data, fp.beta.data]))
        elif bank.variant == "single":
            emb_rows.append(entry.data.copy())
            for l in range(n_blocks):
                fp = denoiser.film_affine(l, Tensor(entry.data))
                bank_film_rows.append(np.concatenate([fp.alpha.data, fp.beta.data]))
        else:
            for fp in entry:
                bank_film_rows.append(np.concatenate([fp.alpha.data, fp.beta.data]))
    if emb_rows:
        result.bank_embeddings = pca(np.stack(emb_rows))
    result.bank_films = pca(np.stack(bank_film_rows))
    return result


# --- subset ablations -----------------------------------------------------------


@dataclass(frozen=True)
class GainDropResult:
    subset: tuple[int, ...]
    m_empty: float
    m_subset: float
    m_complement: float
    m_full: float

    @property
    def gain(self) -> float:
        return self.m_empty - self.m_subset

    @property
    def drop(self) -> float:
        return self.m_complement - self.m_full


def metric_fn(name: str = "energy", n_proj: int = 64, seed: int = 0):
    if name == "energy":
        return lambda a, b: energy_distance(a, b)
    if name == "sliced":
        return lambda a, b: sliced_wasserstein(a, b, n_proj=n_proj, seed=seed)
    raise ValueError(f"unknown metric {name!r}; expected 'energy' or 'sliced'")


def gain_drop(
    denoiser,
    bank: EmbeddingBank,
    schedule: Schedule,
    reference: np.ndarray,
    subsets: list,
    kind: str = "ddim",
    n_samples: int = 2048,
    seed: int = 0,
    metric: str = "energy",
    n_proj: int = 64,
) -> list[GainDropResult]:
    """Metric change when the bank is enabled only on, or removed only from, subsets.

    gain = m(nothing enabled) - m(subset enabled); drop = m(complement
    enabled) - m(everything enabled). Metric values are cached per enabled
    set, so the algebraic identities (empty gain 0, full-set gain == drop)
    hold exactly.
    """
    full = frozenset(range(bank.n_steps))
    for sub in subsets:
        if not frozenset(sub) <= full:
            raise ValueError(f"subset {sorted(sub)} outside step range [0, {bank.n_steps})")
    dist = metric_fn(metric, n_proj=n_proj, seed=seed)
    cache: dict[frozenset, float] = {}

    def measure(enabled: frozenset) -> float:
        if enabled not in cache:
            traj = sample(kind, schedule, denoiser, seed=seed, n=n_samples, bank=bank, mask=enabled)
            cache[enabled] = dist(traj.endpoints, reference)
        return cache[enabled]

    out = []
    for sub in subsets:
        sub = frozenset(sub)
        out.append(
            GainDropResult(
                subset=tuple(sorted(sub)),
                m_empty=measure(frozenset()),
                m_subset=measure(sub),
                m_complement=measure(full - sub),
                m_full=measure(full),
            )
        )
    return out


# --- transfer onto refined schedules ---------------------------------------------


class _RefinedBank:
    """Adapter placing a coarse bank's overrides at the matching refined steps."""

    def __init__(self, bank: EmbeddingBank, k: int, n_steps: int):
        self.bank = bank
        self.k = k
        self.n_steps = n_steps

    def step_override(self, j: int):
        if j % self.k != 0:
            return None
        return self.bank.step_override(j // self.k)


def step_transfer(
    denoiser,
    bank: EmbeddingBank,
    student: Schedule,
    k: int,
    reference: np.ndarray,
    kind: str = "ddim",
    n_samples: int = 2048,
    seed: int = 0,
    metric: str = "energy",
    n_proj: int = 64,
) -> tuple[float, float]:
    """(metric with bank at matching times, vanilla metric) on the k-refined schedule."""
    refined = refine_schedule(student, k)
    dist = metric_fn(metric, n_proj=n_proj, seed=seed)
    mask = {i * k for i in range(bank.n_steps)}
    adapter = _RefinedBank(bank, k, refined.n_intervals)
    with_bank = sample(kind, refined, denoiser, seed=seed, n=n_samples, bank=adapter, mask=mask)
    vanilla = sample(kind, refined, denoiser, seed=seed, n=n_samples)
    return dist(with_bank.endpoints, reference), dist(vanilla.endpoints, reference)
