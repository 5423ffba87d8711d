"""Sectioned plain-text run configuration.

Format: `[section]` headers, one `key = value` per line, `#` comments, blank
lines ignored. Every key is declared in the schema below with a converter;
unknown sections or keys are rejected so typos cannot silently change a run.
"""

from __future__ import annotations

import math
from pathlib import Path


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s: str) -> list[int]:
    s = s.strip()
    return [int(tok) for tok in s.split(";") if tok.strip()] if s else []


# section -> key -> (converter, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "seed": (int, 0),
        "out": (str, "runs/out"),
    },
    "data": {
        "n_modes": (int, 8),
        "radius": (float, 8.0),
        "std": (float, 0.5),
    },
    "net": {
        "data_dim": (int, 2),
        "n_blocks": (int, 6),
        "hidden": (int, 64),
        "embed_dim": (int, 32),
        "n_fourier": (int, 16),
        "sigma_data": (float, 0.5),
    },
    "pretrain": {
        "n_samples": (int, 4096),
        "epochs": (int, 60),
        "batch": (int, 128),
        "lr": (float, 3e-3),
        "sigma_log_mean": (float, math.log(0.5)),
        "sigma_log_std": (float, 1.2),
    },
    "schedule": {
        "kind": (str, "polynomial"),
        "n": (int, 5),
        "sigma_min": (float, 0.002),
        "sigma_max": (float, 80.0),
        "rho": (float, 7.0),
    },
    "solver": {
        "kind": (str, "ddim"),
    },
    "teacher": {
        "solver": (str, "ipndm"),
        "refine": (int, 5),
        "seed_lo": (int, 50000),
        "seed_hi": (int, 50255),
    },
    "distill": {
        "variant": (str, "multi-layer"),
        "lr": (float, 2e-2),
        "lr_min": (float, 1e-3),
        "epsilon": (float, 1e-2),
        "epsilon_min": (float, 1e-3),
        "patience": (int, 10),
        "max_epochs": (int, 300),
        "batch": (int, 64),
        "ref_mode": (str, "rolling"),
    },
    "eval": {
        "n_samples": (int, 2048),
        "n_reference": (int, 20000),
        "n_proj": (int, 64),
    },
    "analysis": {
        "step": (int, 0),
        "layer": (int, 0),
        "grid_points": (int, 121),
        "dense_n": (int, 61),
        "dense_solver": (str, "ipndm"),
        "dense_batch": (int, 64),
        "film_taus": (int, 16),
        "film_iters": (int, 150),
        "transfer_k": (int, 3),
        "gain_subsets": (_int_list, []),
        "metric": (str, "energy"),
    },
    "artifacts": {
        "backbone": (str, ""),
        "teachers": (str, ""),
        "bank": (str, ""),
    },
}


def default_config() -> dict[str, dict]:
    return {sec: {k: default for k, (_, default) in keys.items()} for sec, keys in SCHEMA.items()}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, dict]:
    """Parse a sectioned document onto the defaults; unknown keys are errors."""
    cfg = default_config()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ValueError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ValueError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA[section]:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r} in section [{section}]")
        conv = SCHEMA[section][key][0]
        try:
            cfg[section][key] = conv(value)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: bad value for {section}.{key}: {exc}") from None
    return cfg


def load_config(path: str | Path) -> dict[str, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config_text(path.read_text("utf-8"), source=str(path))


def apply_overrides(cfg: dict[str, dict], overrides: list[str]) -> dict[str, dict]:
    """Apply repeatable `section.key=value` command-line overrides in place."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValueError(f"override must look like section.key=value, got {item!r}")
        dotted, _, value = item.partition("=")
        section, _, key = dotted.strip().partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ValueError(f"unknown config key {section}.{key}")
        cfg[section][key] = SCHEMA[section][key][0](value.strip())
    return cfg


def config_text(cfg: dict[str, dict]) -> str:
    """Serialize back to the sectioned format (stable key order)."""
    lines = []
    for sec in SCHEMA:
        lines.append(f"[{sec}]")
        for key in SCHEMA[sec]:
            v = cfg[sec][key]
            if isinstance(v, list):
                v = ";".join(str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        lines.append("")
    return "\n".join(lines)
