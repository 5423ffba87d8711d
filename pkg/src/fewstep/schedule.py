"""Noise-level discretizations for the samplers.

A schedule is a strictly decreasing list of noise levels from sigma_max down
to sigma_min. Three spacings are supported: `polynomial` (warped by
sigma^(1/rho)), `logsnr` (uniform in ln sigma), and `sigma-uniform` (linear).
Refinement subdivides every interval in the schedule's own warp coordinate so
that a finer run still visits the coarse times bit-exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

KINDS = ("polynomial", "logsnr", "sigma-uniform")

DEFAULT_SIGMA_MIN = 0.002
DEFAULT_SIGMA_MAX = 80.0
DEFAULT_RHO = 7.0


@dataclass(frozen=True)
class Schedule:
    times: np.ndarray = field(repr=False)
    kind: str
    rho: float = DEFAULT_RHO
    sigma_min: float = DEFAULT_SIGMA_MIN
    sigma_max: float = DEFAULT_SIGMA_MAX

    def __post_init__(self):
        arr = np.asarray(self.times, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "times", arr)
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        if len(arr) < 2 or np.any(arr <= 0) or not np.all(np.diff(arr) < 0):
            raise ValueError("schedule times must be >= 2 positive strictly decreasing values")
        if arr[0] != self.sigma_max or arr[-1] != self.sigma_min:
            raise ValueError("schedule endpoints must equal (sigma_max, sigma_min) exactly")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n_intervals(self) -> int:
        return len(self.times) - 1

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.times.tobytes())
        h.update(self.kind.encode())
        h.update(np.float64([self.rho, self.sigma_min, self.sigma_max]).tobytes())
        return h.hexdigest()


def _warp(kind: str, rho: float):
    if kind == "polynomial":
        return lambda s: s ** (1.0 / rho), lambda w: w**rho
    if kind == "logsnr":
        return np.log, np.exp
    if kind == "sigma-uniform":
        return lambda s: s, lambda w: w
    raise ValueError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")


def make_schedule(
    kind: str,
    n: int,
    sigma_min: float = DEFAULT_SIGMA_MIN,
    sigma_max: float = DEFAULT_SIGMA_MAX,
    rho: float = DEFAULT_RHO,
) -> Schedule:
    """Build an n-point strictly decreasing schedule from sigma_max to sigma_min."""
    if n < 2:
        raise ValueError(f"schedule needs at least 2 points, got n={n}")
    if not (0.0 < sigma_min < sigma_max):
        raise ValueError(f"need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    fwd, inv = _warp(kind, rho)
    w_hi, w_lo = fwd(sigma_max), fwd(sigma_min)
    frac = np.arange(n, dtype=np.float64) / (n - 1)
    times = inv(w_hi + frac * (w_lo - w_hi))
    # endpoints forced exact to kill warp round-off
    times[0] = sigma_max
    times[-1] = sigma_min
    return Schedule(times=times, kind=kind, rho=rho, sigma_min=sigma_min, sigma_max=sigma_max)


def refine_schedule(student: Schedule, k: int) -> Schedule:
    """Subdivide every student interval into k equal pieces in warp space.

    Every student time appears bit-exactly in the refined schedule, so states
    recorded on the fine grid can be read off at the coarse times.
    """
    if k < 1:
        raise ValueError(f"refinement factor must be >= 1, got {k}")
    fwd, inv = _warp(student.kind, student.rho)
    n = len(student.times)
    out = np.empty((n - 1) * k + 1, dtype=np.float64)
    for i in range(n - 1):
        w_a, w_b = fwd(student.times[i]), fwd(student.times[i + 1])
        for j in range(k):
            out[i * k + j] = inv(w_a + (j / k) * (w_b - w_a))
        out[i * k] = student.times[i]
    out[-1] = student.times[-1]
    return Schedule(
        times=out,
        kind=student.kind,
        rho=student.rho,
        sigma_min=student.sigma_min,
        sigma_max=student.sigma_max,
    )
