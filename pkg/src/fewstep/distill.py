"""Stage-wise distillation of per-step conditioning overrides.

A bank holds one trainable conditioning unit per solver step: a vector per
block (`multi-layer`), one shared vector (`single`), or a direct (alpha, beta)
pair per block (`deep`). Freshly initialized banks reproduce the vanilla
sampler bit for bit; training then matches each step's output to the teacher
state at that step's end time, one step at a time, advancing live states with
the finalized parameters before the next stage starts.

Early stopping per stage follows a patience rule on the relative improvement
(L_ref - L) / L_ref: an epoch whose improvement falls below the stage's
threshold increments the patience counter, any other epoch resets it, and the
threshold tightens geometrically for later stages. The reference loss is
either the previous epoch's loss (`rolling`, default) or the first epoch's
(`frozen-initial`). The last stage ignores early stopping and always trains
to the full budget.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .denoiser import Denoiser, FilmParams, LayerOverride
from .rng import stream
from .schedule import Schedule
from .solvers import STEP_FNS, SolverState, solver_kind
from .teacher import TeacherSet
from .tensor import Adam, Tensor, backward, square, tape, tmean, tsum

VARIANTS = ("multi-layer", "single", "deep")


class EmbeddingBank:
    """Per-step, per-block trainable conditioning state."""

    def __init__(
        self,
        variant: str,
        n_steps: int,
        n_blocks: int,
        embed_dim: int,
        hidden: int,
        steps: list,
        schedule_fingerprint: str,
        backbone_fingerprint: str,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown bank variant {variant!r}; expected one of {VARIANTS}")
        if len(steps) != n_steps:
            raise ValueError(f"bank has {len(steps)} step entries for {n_steps} steps")
        self.variant = variant
        self.n_steps = n_steps
        self.n_blocks = n_blocks
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.steps = steps
        self.schedule_fingerprint = schedule_fingerprint
        self.backbone_fingerprint = backbone_fingerprint

    def step_override(self, i: int) -> LayerOverride:
        entry = self.steps[i]
        if self.variant == "multi-layer":
            return LayerOverride(self.n_blocks, embeddings=list(entry))
        if self.variant == "single":
            # one leaf broadcast to every block; gradients sum across blocks
            return LayerOverride(self.n_blocks, embeddings=[entry] * self.n_blocks)
        return LayerOverride(self.n_blocks, films=list(entry))

    def step_parameters(self, i: int) -> list[Tensor]:
        entry = self.steps[i]
        if self.variant == "multi-layer":
            return list(entry)
        if self.variant == "single":
            return [entry]
        return [t for fp in entry for t in (fp.alpha, fp.beta)]

    def parameters(self) -> list[Tensor]:
        return [p for i in range(self.n_steps) for p in self.step_parameters(i)]

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def step_values(self, i: int) -> np.ndarray:
        """Flat copy of step i's parameter values (for checksums and tests)."""
        return np.concatenate([p.data.ravel() for p in self.step_parameters(i)]).copy()

    def copy(self) -> "EmbeddingBank":
        steps = []
        for i in range(self.n_steps):
            entry = self.steps[i]
            if self.variant == "multi-layer":
                steps.append([Tensor(t.data.copy(), requires_grad=True, name=t.name) for t in entry])
            elif self.variant == "single":
                steps.append(Tensor(entry.data.copy(), requires_grad=True, name=entry.name))
            else:
                steps.append(
                    [
                        FilmParams(
                            Tensor(fp.alpha.data.copy(), requires_grad=True, name=fp.alpha.name),
                            Tensor(fp.beta.data.copy(), requires_grad=True, name=fp.beta.name),
                        )
                        for fp in entry
                    ]
                )
        return EmbeddingBank(
            self.variant,
            self.n_steps,
            self.n_blocks,
            self.embed_dim,
            self.hidden,
            steps,
            self.schedule_fingerprint,
            self.backbone_fingerprint,
        )


def init_bank(denoiser: Denoiser, schedule: Schedule, variant: str = "multi-layer") -> EmbeddingBank:
    """Bank whose every unit equals the vanilla conditioning at its step time.

    multi-layer/single entries start at e(t_i); deep entries start at block
    l's affine of e(t_i). Either way a fresh bank reproduces the plain
    sampler exactly.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown bank variant {variant!r}; expected one of {VARIANTS}")
    cfg = denoiser.cfg
    steps: list = []
    for i in range(schedule.n_intervals):
        e = denoiser.embed_time(float(schedule.times[i])).data
        if variant == "multi-layer":
            steps.append(
                [
                    Tensor(e.copy(), requires_grad=True, name=f"step{i}.block{l}")
                    for l in range(cfg.n_blocks)
                ]
            )
        elif variant == "single":
            steps.append(Tensor(e.copy(), requires_grad=True, name=f"step{i}"))
        else:
            entry = []
            for l in range(cfg.n_blocks):
                fp = denoiser.film_affine(l, Tensor(e))
                entry.append(
                    FilmParams(
                        Tensor(fp.alpha.data.copy(), requires_grad=True, name=f"step{i}.block{l}.alpha"),
                        Tensor(fp.beta.data.copy(), requires_grad=True, name=f"step{i}.block{l}.beta"),
                    )
                )
            steps.append(entry)
    return EmbeddingBank(
        variant=variant,
        n_steps=schedule.n_intervals,
        n_blocks=cfg.n_blocks,
        embed_dim=cfg.embed_dim,
        hidden=cfg.hidden,
        steps=steps,
        schedule_fingerprint=schedule.fingerprint(),
        backbone_fingerprint=denoiser.weights_digest(),
    )


@dataclass(frozen=True)
class DistillConfig:
    lr: float = 2e-2
    lr_min: float = 1e-3
    epsilon: float = 1e-2
    epsilon_min: float = 1e-3
    patience: int = 10
    max_epochs: int = 300
    batch: int = 64
    ref_mode: str = "rolling"
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon_min <= self.epsilon):
            raise ValueError("need 0 < epsilon_min <= epsilon")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be >= 1")
        if self.ref_mode not in ("rolling", "frozen-initial"):
            raise ValueError(f"unknown ref_mode {self.ref_mode!r}")
        if self.lr < 0 or self.lr_min < 0:
            raise ValueError("learning rates must be non-negative")


@dataclass
class TrainReport:
    loss_curves: list[np.ndarray]
    epochs_used: list[int]
    stop_reasons: list[str]
    wall_time: float

    def rows(self):
        """(step, epoch, loss) rows for delimited export."""
        for i, curve in enumerate(self.loss_curves):
            for c, v in enumerate(curve):
                yield i, c, float(v)


def stage_thresholds(cfg: DistillConfig, n_steps: int) -> np.ndarray:
    """Geometric tightening from epsilon down to epsilon_min across steps."""
    if n_steps == 1:
        return np.array([cfg.epsilon])
    expo = np.arange(n_steps) / (n_steps - 1)
    return cfg.epsilon * (cfg.epsilon_min / cfg.epsilon) ** expo


def _mse_loss(x_next: Tensor, target: np.ndarray) -> Tensor:
    return tmean(tsum(square(x_next - Tensor(target)), axis=1))


def _check_fingerprints(bank: EmbeddingBank, teachers: TeacherSet, denoiser: Denoiser) -> None:
    sched_fp = teachers.student.fingerprint()
    if bank.schedule_fingerprint != sched_fp:
        raise ValueError(
            f"bank schedule fingerprint {bank.schedule_fingerprint[:12]} does not match "
            f"teacher schedule fingerprint {sched_fp[:12]}"
        )
    net_fp = denoiser.weights_digest()
    for label, fp in (("bank", bank.backbone_fingerprint), ("teachers", teachers.backbone_fingerprint)):
        if fp and fp != net_fp:
            raise ValueError(
                f"{label} backbone fingerprint {fp[:12]} does not match network fingerprint {net_fp[:12]}"
            )


def train(
    bank: EmbeddingBank,
    teachers: TeacherSet,
    denoiser: Denoiser,
    kind: str = "ddim",
    cfg: DistillConfig = DistillConfig(),
) -> tuple[EmbeddingBank, TrainReport]:
    """Stage-wise trajectory matching; mutates and returns the bank.

    Stage i minibatches over teacher seeds, takes the solver step from the
    live states at t_i with stage i's override, regresses onto the teacher
    states at t_{i+1}, and updates only stage i's parameters. Once a stage
    stops, every live state advances with the finalized parameters.
    """
    t0 = time.perf_counter()
    _check_fingerprints(bank, teachers, denoiser)
    kind = solver_kind(kind)
    step_fn = STEP_FNS[kind.tag]
    times = teachers.student.times
    n_steps = bank.n_steps
    if n_steps != teachers.student.n_intervals:
        raise ValueError(f"bank covers {n_steps} steps, schedule has {teachers.student.n_intervals}")
    thresholds = stage_thresholds(cfg, n_steps)
    n_seeds = teachers.n_seeds
    batch = min(cfg.batch, n_seeds)

    x_live = teachers.states[:, 0, :].copy()
    full_state = SolverState(kind)
    curves: list[np.ndarray] = []
    epochs_used: list[int] = []
    stop_reasons: list[str] = []

    for i in range(n_steps):
        t_cur, t_next = float(times[i]), float(times[i + 1])
        target = teachers.states[:, i + 1, :]
        ov = bank.step_override(i)
        opt = Adam(bank.step_parameters(i), lr=cfg.lr)
        batch_rng = stream(cfg.seed, "distill-batch", i)
        is_final = i == n_steps - 1
        eps_i = float(thresholds[i])
        losses: list[float] = []
        c = 0
        p = 0
        l_ref = None
        while c < cfg.max_epochs and (is_final or p < cfg.patience):
            idx = batch_rng.permutation(n_seeds)[:batch]
            with tape():
                x_next = step_fn(
                    x_live[idx], t_cur, t_next, denoiser, ov=ov,
                    state=full_state.rows(idx), update_state=False,
                )
                loss = _mse_loss(x_next, target[idx])
                value = loss.item()
                if not np.isfinite(value):
                    raise FloatingPointError(f"distillation diverged at step {i}, epoch {c}")
                backward(loss)
            if cfg.max_epochs > 1:
                lr_c = cfg.lr + (cfg.lr_min - cfg.lr) * c / (cfg.max_epochs - 1)
            else:
                lr_c = cfg.lr
            opt.step(lr=lr_c)
            opt.zero_grad()
            losses.append(value)
            if c == 0:
                l_ref = value
            else:
                if l_ref <= 0.0:
                    p += 1
                elif (l_ref - value) / l_ref < eps_i:
                    p += 1
                else:
                    p = 0
                if cfg.ref_mode == "rolling":
                    l_ref = value
            c += 1
        curves.append(np.asarray(losses))
        epochs_used.append(c)
        if is_final:
            stop_reasons.append("forced-full")
        elif p >= cfg.patience:
            stop_reasons.append("threshold")
        else:
            stop_reasons.append("budget")
        # advance every live state with the finalized stage parameters
        x_live = step_fn(x_live, t_cur, t_next, denoiser, ov=ov, state=full_state).data
    return bank, TrainReport(
        loss_curves=curves,
        epochs_used=epochs_used,
        stop_reasons=stop_reasons,
        wall_time=time.perf_counter() - t0,
    )


def train_single(bank, teachers, denoiser, kind="ddim", cfg=DistillConfig()):
    """train() for a single-vector-per-step bank."""
    if bank.variant != "single":
        raise ValueError(f"expected a 'single' bank, got {bank.variant!r}")
    return train(bank, teachers, denoiser, kind, cfg)


def train_deep(bank, teachers, denoiser, kind="ddim", cfg=DistillConfig()):
    """train() for a direct (alpha, beta) bank."""
    if bank.variant != "deep":
        raise ValueError(f"expected a 'deep' bank, got {bank.variant!r}")
    return train(bank, teachers, denoiser, kind, cfg)


def trajectory_losses(
    denoiser: Denoiser,
    teachers: TeacherSet,
    kind: str = "ddim",
    bank: EmbeddingBank | None = None,
) -> np.ndarray:
    """Per-step mean squared next-state error of a live rollout vs the teachers.

    States start at the teacher start states and advance with the bank's (or
    vanilla) conditioning, mirroring the training protocol.
    """
    kind = solver_kind(kind)
    step_fn = STEP_FNS[kind.tag]
    times = teachers.student.times
    x = teachers.states[:, 0, :].copy()
    state = SolverState(kind)
    out = []
    for i in range(teachers.student.n_intervals):
        ov = bank.step_override(i) if bank is not None else None
        x = step_fn(x, float(times[i]), float(times[i + 1]), denoiser, ov=ov, state=state).data
        diff = x - teachers.states[:, i + 1, :]
        out.append(float((diff * diff).sum(axis=1).mean()))
    return np.asarray(out)
