"""Deterministic probability-flow ODE steppers with conditioning hooks.

All three steppers integrate dx/dt = (x - D(x, t)) / t from sigma_max down to
sigma_min and call the denoiser exactly once per step. Multistep history is
always detached: gradients flow only through the current step's conditioning
override, never through earlier evaluations.

The `denoiser` argument is anything callable as denoiser(x, t, ov) returning
an array or Tensor shaped like x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .schedule import Schedule
from .rng import stream
from .tensor import Tensor, as_tensor, detach

TAGS = ("ddim", "ipndm", "dpmpp3m")

_ADAMS_BASHFORTH = {
    1: (1.0,),
    2: (3.0 / 2.0, -1.0 / 2.0),
    3: (23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0),
    4: (55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0),
}


@dataclass(frozen=True)
class SolverKind:
    tag: str
    max_order: int


def solver_kind(tag: str | SolverKind) -> SolverKind:
    if isinstance(tag, SolverKind):
        return tag
    orders = {"ddim": 1, "ipndm": 4, "dpmpp3m": 3}
    if tag not in orders:
        raise ValueError(f"unknown solver {tag!r}; expected one of {TAGS}")
    return SolverKind(tag=tag, max_order=orders[tag])


class SolverState:
    """Ring buffer of detached previous evaluations (at most max_order - 1)."""

    def __init__(self, kind: str | SolverKind):
        self.kind = solver_kind(kind)
        self.history: list = []
        self.steps_taken = 0

    def push(self, entry) -> None:
        self.history.append(entry)
        cap = self.kind.max_order - 1
        if len(self.history) > cap:
            del self.history[: len(self.history) - cap]

    def rows(self, idx) -> "SolverState":
        """View of the state restricted to a row subset of a batched run."""
        sub = SolverState(self.kind)
        sub.steps_taken = self.steps_taken
        for entry in self.history:
            if isinstance(entry, tuple):
                arr, lam = entry
                sub.history.append((arr[idx], lam))
            else:
                sub.history.append(entry[idx])
        return sub


def _check_times(op: str, t_cur: float, t_next: float) -> None:
    if not (t_cur > t_next > 0):
        raise ValueError(f"{op}: times must satisfy t_cur > t_next > 0, got ({t_cur}, {t_next})")


def ddim_step(x, t_cur: float, t_next: float, denoiser, ov=None, state: SolverState | None = None,
              update_state: bool = True) -> Tensor:
    """First-order (Euler) step x + (t_next - t_cur) * (x - D) / t_cur."""
    _check_times("ddim_step", t_cur, t_next)
    xt = as_tensor(x)
    den = as_tensor(denoiser(xt, t_cur, ov))
    d_cur = (xt - den) * (1.0 / t_cur)
    if state is not None and update_state:
        state.steps_taken += 1
    return xt + (t_next - t_cur) * d_cur


def ipndm_step(x, t_cur: float, t_next: float, denoiser, ov=None, state: SolverState | None = None,
               update_state: bool = True) -> Tensor:
    """Adams-Bashforth multistep on the ODE slope, warming up from order 1."""
    _check_times("ipndm_step", t_cur, t_next)
    xt = as_tensor(x)
    den = as_tensor(denoiser(xt, t_cur, ov))
    d_cur = (xt - den) * (1.0 / t_cur)
    hist = state.history if state is not None else []
    order = min(4, len(hist) + 1)
    w = _ADAMS_BASHFORTH[order]
    combo = w[0] * d_cur
    for j in range(1, order):
        combo = combo + w[j] * Tensor(hist[-j])
    if state is not None and update_state:
        state.push(detach(d_cur).data)
        state.steps_taken += 1
    return xt + (t_next - t_cur) * combo


def dpmpp3m_step(x, t_cur: float, t_next: float, denoiser, ov=None, state: SolverState | None = None,
                 update_state: bool = True) -> Tensor:
    """Multistep exponential-integrator update on the data prediction.

    Works in lam = -ln t; with unit signal scale the one-step form collapses
    to x_next = (t_next/t_cur) x + (1 - t_next/t_cur) D, and the higher orders
    add finite-difference corrections built from detached history.
    """
    _check_times("dpmpp3m_step", t_cur, t_next)
    xt = as_tensor(x)
    m0 = as_tensor(denoiser(xt, t_cur, ov))
    lam_cur = -math.log(t_cur)
    lam_next = -math.log(t_next)
    h = lam_next - lam_cur
    r = math.exp(-h)
    hist = state.history if state is not None else []
    if len(hist) == 0:
        out = r * xt - (r - 1.0) * m0
    elif len(hist) == 1:
        m1, lam1 = hist[-1]
        r0 = (lam_cur - lam1) / h
        d1_0 = (m0 - Tensor(m1)) * (1.0 / r0)
        out = r * xt - (r - 1.0) * m0 - 0.5 * (r - 1.0) * d1_0
    else:
        m1, lam1 = hist[-1]
        m2, lam2 = hist[-2]
        r0 = (lam_cur - lam1) / h
        r1 = (lam1 - lam2) / h
        d1_0 = (m0 - Tensor(m1)) * (1.0 / r0)
        d1_1 = (m1 - m2) / r1
        d1 = d1_0 + (r0 / (r0 + r1)) * (d1_0 - Tensor(d1_1))
        d2 = (d1_0 - Tensor(d1_1)) * (1.0 / (r0 + r1))
        out = (
            r * xt
            - (r - 1.0) * m0
            + ((r - 1.0) / h + 1.0) * d1
            - ((r - 1.0 + h) / (h * h) - 0.5) * d2
        )
    if state is not None and update_state:
        state.push((detach(m0).data, lam_cur))
        state.steps_taken += 1
    return out


STEP_FNS = {"ddim": ddim_step, "ipndm": ipndm_step, "dpmpp3m": dpmpp3m_step}


@dataclass
class Trajectory:
    schedule: Schedule
    states: np.ndarray = field(repr=False)  # (n_times, batch, dim)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != len(self.schedule):
            raise ValueError(
                f"trajectory has {len(self.states)} states for {len(self.schedule)} schedule times"
            )

    @property
    def endpoints(self) -> np.ndarray:
        return self.states[-1]


def initial_noise(schedule: Schedule, seed: int, n: int, dim: int) -> np.ndarray:
    """Prior draw sigma_max * N(0, I), one stream per trajectory seed."""
    return schedule.times[0] * stream(seed, "trajectory-init").standard_normal((n, dim))


def sample(
    kind: str | SolverKind,
    schedule: Schedule,
    denoiser,
    seed: int | None = None,
    n: int = 1,
    x_init: np.ndarray | None = None,
    bank=None,
    mask=None,
) -> Trajectory:
    """Roll the chosen stepper over a schedule, one denoiser call per step.

    `bank`, when given, must expose n_steps and step_override(i); step i uses
    its override when i is in `mask` (mask None means every step). Everything
    is deterministic given the seed.
    """
    kind = solver_kind(kind)
    step_fn = STEP_FNS[kind.tag]
    if bank is not None and bank.n_steps != schedule.n_intervals:
        raise ValueError(
            f"bank covers {bank.n_steps} steps but schedule has {schedule.n_intervals} intervals"
        )
    if x_init is None:
        if seed is None:
            raise ValueError("sample: provide either a seed or x_init")
        dim = denoiser.cfg.data_dim if hasattr(denoiser, "cfg") else 2
        x_init = initial_noise(schedule, seed, n, dim)
    x = np.asarray(x_init, dtype=np.float64)
    states = [x]
    state = SolverState(kind)
    times = schedule.times
    for i in range(schedule.n_intervals):
        ov = None
        if bank is not None and (mask is None or i in mask):
            ov = bank.step_override(i)
        x = step_fn(x, float(times[i]), float(times[i + 1]), denoiser, ov=ov, state=state).data
        states.append(x)
    return Trajectory(
        schedule=schedule,
        states=np.stack(states),
        provenance={
            "solver": kind.tag,
            "seed": seed,
            "n": len(x_init),
            "bank": bank is not None,
            "mask": sorted(mask) if mask is not None else None,
        },
    )
