"""Binary container format and typed artifact save/load.

One container layout serves every artifact: an 8-byte magic, a u32 format
version, a UTF-8 key/value header, then named float64 tensors. Everything is
little-endian and round-trips bitwise. Writes go to a temp file in the target
directory and rename into place, so readers never observe partial files.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .denoiser import Denoiser, FilmParams, NetConfig
from .distill import EmbeddingBank
from .schedule import Schedule
from .solvers import Trajectory
from .teacher import TeacherSet
from .tensor import Tensor

MAGIC = b"FEWSTEP1"
VERSION = 1


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def write_container(path: str | Path, meta: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", VERSION)
    buf += struct.pack("<I", len(meta))
    for k, v in meta.items():
        buf += _pack_str(str(k))
        buf += _pack_str(str(v))
    buf += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        buf += _pack_str(str(name))
        buf += struct.pack("<I", arr.ndim)
        for extent in arr.shape:
            buf += struct.pack("<Q", extent)
        buf += arr.tobytes(order="C")
    atomic_write_bytes(path, bytes(buf))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.raw):
            raise ValueError(f"{self.path}: truncated container")
        out = self.raw[self.off : self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def read_container(path: str | Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    r = _Reader(raw, path)
    if r.take(8) != MAGIC:
        raise ValueError(f"{path}: not a container file (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise ValueError(f"{path}: unsupported container version {version}, expected {VERSION}")
    meta = {}
    for _ in range(r.u32()):
        k = r.string()
        meta[k] = r.string()
    tensors = {}
    for _ in range(r.u32()):
        name = r.string()
        rank = r.u32()
        shape = tuple(r.u64() for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(count * 8), dtype="<f8").reshape(shape)
        tensors[name] = np.array(data, dtype=np.float64)
    return meta, tensors


# --- typed artifacts ---------------------------------------------------------


def save_backbone(path: str | Path, net: Denoiser) -> None:
    c = net.cfg
    meta = {
        "kind": "backbone",
        "data_dim": str(c.data_dim),
        "n_blocks": str(c.n_blocks),
        "hidden": str(c.hidden),
        "embed_dim": str(c.embed_dim),
        "n_fourier": str(c.n_fourier),
        "sigma_data": repr(c.sigma_data),
        "digest": net.weights_digest(),
    }
    write_container(path, meta, net.weights())


def load_backbone(path: str | Path) -> Denoiser:
    meta, tensors = read_container(path)
    if meta.get("kind") != "backbone":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'backbone'")
    cfg = NetConfig(
        data_dim=int(meta["data_dim"]),
        n_blocks=int(meta["n_blocks"]),
        hidden=int(meta["hidden"]),
        embed_dim=int(meta["embed_dim"]),
        n_fourier=int(meta["n_fourier"]),
        sigma_data=float(meta["sigma_data"]),
    )
    net = Denoiser(cfg, weights=tensors).freeze()
    if net.weights_digest() != meta["digest"]:
        raise ValueError(f"{path}: weights digest mismatch, file is corrupt")
    return net


def _schedule_meta(s: Schedule) -> dict[str, str]:
    return {
        "schedule_kind": s.kind,
        "schedule_rho": repr(s.rho),
        "schedule_sigma_min": repr(s.sigma_min),
        "schedule_sigma_max": repr(s.sigma_max),
    }


def _schedule_from(meta: dict[str, str], times: np.ndarray) -> Schedule:
    return Schedule(
        times=times,
        kind=meta["schedule_kind"],
        rho=float(meta["schedule_rho"]),
        sigma_min=float(meta["schedule_sigma_min"]),
        sigma_max=float(meta["schedule_sigma_max"]),
    )


def save_teachers(path: str | Path, ts: TeacherSet) -> None:
    meta = {
        "kind": "teachers",
        **_schedule_meta(ts.student),
        "refine_k": str(ts.k),
        "solver": ts.solver,
        "seed_lo": str(ts.seed_lo),
        "seed_hi": str(ts.seed_hi),
        "backbone_fingerprint": ts.backbone_fingerprint,
        "schedule_fingerprint": ts.student.fingerprint(),
    }
    write_container(path, meta, {"times": ts.student.times, "states": ts.states})


def load_teachers(path: str | Path) -> TeacherSet:
    meta, tensors = read_container(path)
    if meta.get("kind") != "teachers":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'teachers'")
    student = _schedule_from(meta, tensors["times"])
    if student.fingerprint() != meta["schedule_fingerprint"]:
        raise ValueError(f"{path}: schedule fingerprint mismatch, file is corrupt")
    return TeacherSet(
        student=student,
        k=int(meta["refine_k"]),
        solver=meta["solver"],
        seed_lo=int(meta["seed_lo"]),
        seed_hi=int(meta["seed_hi"]),
        states=tensors["states"],
        backbone_fingerprint=meta["backbone_fingerprint"],
    )


def save_bank(path: str | Path, bank: EmbeddingBank) -> None:
    meta = {
        "kind": "bank",
        "variant": bank.variant,
        "n_steps": str(bank.n_steps),
        "n_blocks": str(bank.n_blocks),
        "embed_dim": str(bank.embed_dim),
        "hidden": str(bank.hidden),
        "schedule_fingerprint": bank.schedule_fingerprint,
        "backbone_fingerprint": bank.backbone_fingerprint,
    }
    tensors: dict[str, np.ndarray] = {}
    for i in range(bank.n_steps):
        entry = bank.steps[i]
        if bank.variant == "multi-layer":
            for l, vec in enumerate(entry):
                tensors[f"step{i}_block{l}"] = vec.data
        elif bank.variant == "single":
            tensors[f"step{i}"] = entry.data
        else:
            for l, fp in enumerate(entry):
                tensors[f"step{i}_block{l}_alpha"] = fp.alpha.data
                tensors[f"step{i}_block{l}_beta"] = fp.beta.data
    write_container(path, meta, tensors)


def load_bank(path: str | Path) -> EmbeddingBank:
    meta, tensors = read_container(path)
    if meta.get("kind") != "bank":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'bank'")
    variant = meta["variant"]
    n_steps = int(meta["n_steps"])
    n_blocks = int(meta["n_blocks"])
    steps: list = []
    for i in range(n_steps):
        if variant == "multi-layer":
            steps.append(
                [
                    Tensor(tensors[f"step{i}_block{l}"].copy(), requires_grad=True, name=f"step{i}.block{l}")
                    for l in range(n_blocks)
                ]
            )
        elif variant == "single":
            steps.append(Tensor(tensors[f"step{i}"].copy(), requires_grad=True, name=f"step{i}"))
        else:
            steps.append(
                [
                    FilmParams(
                        Tensor(
                            tensors[f"step{i}_block{l}_alpha"].copy(),
                            requires_grad=True,
                            name=f"step{i}.block{l}.alpha",
                        ),
                        Tensor(
                            tensors[f"step{i}_block{l}_beta"].copy(),
                            requires_grad=True,
                            name=f"step{i}.block{l}.beta",
                        ),
                    )
                    for l in range(n_blocks)
                ]
            )
    return EmbeddingBank(
        variant=variant,
        n_steps=n_steps,
        n_blocks=n_blocks,
        embed_dim=int(meta["embed_dim"]),
        hidden=int(meta["hidden"]),
        steps=steps,
        schedule_fingerprint=meta["schedule_fingerprint"],
        backbone_fingerprint=meta["backbone_fingerprint"],
    )


def save_trajectory(path: str | Path, traj: Trajectory) -> None:
    prov = traj.provenance
    meta = {
        "kind": "trajectory",
        **_schedule_meta(traj.schedule),
        "solver": str(prov.get("solver", "")),
        "seed": str(prov.get("seed", "")),
        "bank": str(bool(prov.get("bank", False))),
        "schedule_fingerprint": traj.schedule.fingerprint(),
    }
    write_container(path, meta, {"times": traj.schedule.times, "states": traj.states})


def load_trajectory(path: str | Path) -> Trajectory:
    meta, tensors = read_container(path)
    if meta.get("kind") != "trajectory":
        raise ValueError(f"{path}: container holds {meta.get('kind')!r}, expected 'trajectory'")
    schedule = _schedule_from(meta, tensors["times"])
    if schedule.fingerprint() != meta["schedule_fingerprint"]:
        raise ValueError(f"{path}: schedule fingerprint mismatch, file is corrupt")
    return Trajectory(
        schedule=schedule,
        states=tensors["states"],
        provenance={
            "solver": meta["solver"],
            "seed": None if meta["seed"] in ("", "None") else int(meta["seed"]),
            "bank": meta["bank"] == "True",
        },
    )
