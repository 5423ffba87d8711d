"""Command-line experiment driver.

Subcommands cover the full pipeline: pretrain the backbone, roll out teacher
trajectories, distill the per-step conditioning bank, sample, evaluate, and
run the analysis probes. Every command writes its artifacts plus a JSON
manifest (config snapshot, seed, artifact digests, wall time) into the output
directory. Reports are CSVs with matplotlib figures rendered alongside them;
wall time appears only in the manifest so reruns produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, reports
from .config import apply_overrides, default_config, load_config
from .denoiser import Denoiser, NetConfig
from .distill import DistillConfig, init_bank, train
from .mixture import GmmSpec, circle_means, sample_gmm
from .persist import (
    atomic_write_text,
    load_backbone,
    load_bank,
    load_teachers,
    save_backbone,
    save_bank,
    save_teachers,
    save_trajectory,
)
from .pretrain import TrainBackboneConfig, train_backbone
from .rng import stream
from .schedule import Schedule, make_schedule
from .solvers import sample
from .teacher import gen_teachers

ANALYSES = ("sweep", "layer-sweep", "feature-pca", "film", "emb-pca", "gain-drop", "step-transfer")


class MissingArtifact(Exception):
    def __init__(self, path: Path):
        super().__init__(str(path))
        self.path = path


# --- config plumbing --------------------------------------------------------------


def _resolve_config(args) -> dict:
    cfg = load_config(args.config) if args.config else default_config()
    apply_overrides(cfg, args.set or [])
    if args.out is not None:
        cfg["run"]["out"] = args.out
    if args.seed is not None:
        cfg["run"]["seed"] = args.seed
    return cfg


def _out_dir(cfg) -> Path:
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _artifact_path(cfg, name: str) -> tuple[Path, bool]:
    """Resolved path and whether the config named it explicitly."""
    explicit = cfg["artifacts"][name]
    if explicit:
        return Path(explicit), True
    return _out_dir(cfg) / f"{name}.bin", False


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingArtifact(path)
    return path


def _gmm_spec(cfg) -> GmmSpec:
    d = cfg["data"]
    return GmmSpec(means=circle_means(d["n_modes"], d["radius"]), std=d["std"])


def _net_cfg(cfg) -> NetConfig:
    n = cfg["net"]
    return NetConfig(
        data_dim=n["data_dim"],
        n_blocks=n["n_blocks"],
        hidden=n["hidden"],
        embed_dim=n["embed_dim"],
        n_fourier=n["n_fourier"],
        sigma_data=n["sigma_data"],
    )


def _schedule(cfg) -> Schedule:
    s = cfg["schedule"]
    return make_schedule(s["kind"], s["n"], s["sigma_min"], s["sigma_max"], s["rho"])


def _distill_cfg(cfg) -> DistillConfig:
    d = cfg["distill"]
    return DistillConfig(
        lr=d["lr"],
        lr_min=d["lr_min"],
        epsilon=d["epsilon"],
        epsilon_min=d["epsilon_min"],
        patience=d["patience"],
        max_epochs=d["max_epochs"],
        batch=d["batch"],
        ref_mode=d["ref_mode"],
        seed=cfg["run"]["seed"],
    )


def _check_backbone(owner: str, fp: str, net: Denoiser) -> None:
    digest = net.weights_digest()
    if fp != digest:
        raise ValueError(f"{owner} was built for backbone {fp[:12]}, loaded backbone is {digest[:12]}")


def _check_schedule(owner: str, fp: str, schedule: Schedule) -> None:
    if fp != schedule.fingerprint():
        raise ValueError(
            f"{owner} was built for schedule {fp[:12]}, configured schedule is {schedule.fingerprint()[:12]}"
        )


def _reference_draws(cfg) -> np.ndarray:
    rng = stream(cfg["run"]["seed"], "eval-reference")
    return sample_gmm(_gmm_spec(cfg), cfg["eval"]["n_reference"], rng)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(cfg, command: str, artifacts: dict[str, Path], wall: float) -> Path:
    out = _out_dir(cfg)
    doc = {
        "command": command,
        "seed": cfg["run"]["seed"],
        "config": cfg,
        "artifacts": {
            label: {"path": str(p), "sha256": _sha256(Path(p))} for label, p in sorted(artifacts.items())
        },
        "wall_time_s": wall,
    }
    path = out / f"manifest-{command}.json"
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


# --- pipeline commands ------------------------------------------------------------


def _cmd_train_backbone(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    p = cfg["pretrain"]
    train_cfg = TrainBackboneConfig(
        n_samples=p["n_samples"],
        epochs=p["epochs"],
        batch=p["batch"],
        lr=p["lr"],
        sigma_log_mean=p["sigma_log_mean"],
        sigma_log_std=p["sigma_log_std"],
        seed=cfg["run"]["seed"],
    )
    net, losses = train_backbone(_gmm_spec(cfg), train_cfg, _net_cfg(cfg))
    backbone_path, _ = _artifact_path(cfg, "backbone")
    save_backbone(backbone_path, net)
    csv = reports.write_csv(out / "pretrain_loss.csv", ["epoch", "loss"], list(enumerate(losses.tolist())))
    fig = reports.plot_loss_curves(out / "pretrain_loss.png", [losses], "backbone pretraining loss")
    return {"backbone": backbone_path, "pretrain_loss.csv": csv, "pretrain_loss.png": fig}


def _cmd_gen_teachers(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    t = cfg["teacher"]
    ts = gen_teachers(
        net,
        _schedule(cfg),
        k=t["refine"],
        kind=t["solver"],
        seed_lo=t["seed_lo"],
        seed_hi=t["seed_hi"],
    )
    teachers_path, _ = _artifact_path(cfg, "teachers")
    save_teachers(teachers_path, ts)
    ends = ts.states[:, -1, :]
    rows = [(int(s), float(e[0]), float(e[1])) for s, e in zip(ts.seeds, ends)]
    csv = reports.write_csv(out / "teacher_endpoints.csv", ["seed", "x", "y"], rows)
    fig = reports.plot_scatter(out / "teacher_endpoints.png", ends, "teacher trajectory endpoints")
    return {"teachers": teachers_path, "teacher_endpoints.csv": csv, "teacher_endpoints.png": fig}


def _cmd_train_mteo(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    ts = load_teachers(_require(_artifact_path(cfg, "teachers")[0]))
    _check_backbone("teacher set", ts.backbone_fingerprint, net)
    bank = init_bank(net, ts.student, cfg["distill"]["variant"])
    bank, report = train(bank, ts, net, kind=cfg["solver"]["kind"], cfg=_distill_cfg(cfg))
    bank_path, _ = _artifact_path(cfg, "bank")
    save_bank(bank_path, bank)
    curves_csv = reports.write_csv(out / "distill_loss.csv", ["step", "epoch", "loss"], report.rows())
    summary_rows = [
        (i, report.epochs_used[i], report.stop_reasons[i],
         float(report.loss_curves[i][0]), float(report.loss_curves[i][-1]))
        for i in range(len(report.loss_curves))
    ]
    summary_csv = reports.write_csv(
        out / "distill_summary.csv",
        ["step", "epochs", "stop_reason", "first_loss", "final_loss"],
        summary_rows,
    )
    fig = reports.plot_loss_curves(out / "distill_loss.png", report.loss_curves, "per-step distillation loss")
    return {
        "bank": bank_path,
        "distill_loss.csv": curves_csv,
        "distill_summary.csv": summary_csv,
        "distill_loss.png": fig,
    }


def _load_bank_if_any(cfg, net: Denoiser, schedule: Schedule):
    """Trained bank when available: required if named explicitly, else optional."""
    path, explicit = _artifact_path(cfg, "bank")
    if explicit:
        _require(path)
    elif not path.exists():
        return None, None
    bank = load_bank(path)
    _check_backbone("bank", bank.backbone_fingerprint, net)
    _check_schedule("bank", bank.schedule_fingerprint, schedule)
    return bank, path


def _cmd_sample(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    schedule = _schedule(cfg)
    bank, bank_path = _load_bank_if_any(cfg, net, schedule)
    traj = sample(
        cfg["solver"]["kind"],
        schedule,
        net,
        seed=cfg["run"]["seed"],
        n=cfg["eval"]["n_samples"],
        bank=bank,
    )
    traj_path = out / "trajectory.bin"
    save_trajectory(traj_path, traj)
    ends = traj.endpoints
    rows = [(i, float(p[0]), float(p[1])) for i, p in enumerate(ends)]
    csv = reports.write_csv(out / "sample_endpoints.csv", ["index", "x", "y"], rows)
    fig = reports.plot_scatter(out / "sample_endpoints.png", ends, "sampler endpoints", _reference_draws(cfg))
    artifacts = {"trajectory": traj_path, "sample_endpoints.csv": csv, "sample_endpoints.png": fig}
    if bank_path is not None:
        artifacts["bank"] = bank_path
    return artifacts


def _cmd_eval(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    schedule = _schedule(cfg)
    reference = _reference_draws(cfg)
    seed = cfg["run"]["seed"]
    n = cfg["eval"]["n_samples"]
    kind = cfg["solver"]["kind"]
    n_proj = cfg["eval"]["n_proj"]

    arms = [("vanilla", None), ("fresh-bank", init_bank(net, schedule, cfg["distill"]["variant"]))]
    bank, bank_path = _load_bank_if_any(cfg, net, schedule)
    if bank is not None:
        arms.append(("trained-bank", bank))

    energy = analysis.metric_fn("energy")
    sliced = analysis.metric_fn("sliced", n_proj=n_proj, seed=seed)
    rows = []
    figures = {}
    for name, arm_bank in arms:
        ends = sample(kind, schedule, net, seed=seed, n=n, bank=arm_bank).endpoints
        rows.append((name, kind, schedule.n_intervals, n, energy(ends, reference), sliced(ends, reference)))
        figures[f"eval_{name}.png"] = reports.plot_scatter(
            out / f"eval_{name}.png", ends, f"{name} endpoints", reference
        )
    csv = reports.write_csv(
        out / "eval_metrics.csv",
        ["arm", "solver", "n_intervals", "n_samples", "energy_distance", "sliced_w1"],
        rows,
    )
    artifacts = {"eval_metrics.csv": csv, **figures}
    if bank_path is not None:
        artifacts["bank"] = bank_path
    return artifacts


# --- analysis commands ------------------------------------------------------------


def _cmd_analyze_sweep(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    ts = load_teachers(_require(_artifact_path(cfg, "teachers")[0]))
    _check_backbone("teacher set", ts.backbone_fingerprint, net)
    step = cfg["analysis"]["step"]
    grid = analysis.default_sweep_grid(cfg["analysis"]["grid_points"])
    res = analysis.time_sweep(net, ts, step, grid)
    per_seed = res.per_seed_tau_star()
    csv = reports.write_csv(
        out / f"sweep_step{step}.csv",
        ["tau", "mean_dist"],
        zip(res.grid.tolist(), res.mean_dists.tolist()),
    )
    interior_frac = float(np.mean((per_seed < res.t_cur) & (per_seed > res.t_next)))
    summary = reports.write_csv(
        out / f"sweep_summary_step{step}.csv",
        ["step", "t_cur", "t_next", "tau_star", "interior", "interior_seed_fraction"],
        [(step, res.t_cur, res.t_next, res.tau_star, res.interior, interior_frac)],
    )
    fig = reports.plot_sweep(
        out / f"sweep_step{step}.png", res.grid, res.mean_dists, res.t_cur, res.t_next, res.tau_star,
        f"conditioning-time sweep, step {step}",
    )
    return {
        f"sweep_step{step}.csv": csv,
        f"sweep_summary_step{step}.csv": summary,
        f"sweep_step{step}.png": fig,
    }


def _cmd_analyze_layer_sweep(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    ts = load_teachers(_require(_artifact_path(cfg, "teachers")[0]))
    _check_backbone("teacher set", ts.backbone_fingerprint, net)
    step = cfg["analysis"]["step"]
    grid = analysis.default_sweep_grid(cfg["analysis"]["grid_points"])
    rows = []
    summary_rows = []
    curves = []
    for layer in range(net.cfg.n_blocks):
        res = analysis.layer_time_sweep(net, ts, step, layer, grid)
        rows.extend((layer, tau, d) for tau, d in zip(res.grid.tolist(), res.mean_dists.tolist()))
        summary_rows.append((step, layer, res.t_cur, res.t_next, res.tau_star, res.interior))
        curves.append(res.mean_dists)
    csv = reports.write_csv(out / f"layer_sweep_step{step}.csv", ["layer", "tau", "mean_dist"], rows)
    summary = reports.write_csv(
        out / f"layer_sweep_summary_step{step}.csv",
        ["step", "layer", "t_cur", "t_next", "tau_star", "interior"],
        summary_rows,
    )
    fig = reports.plot_lines(
        out / f"layer_sweep_step{step}.png",
        grid,
        [c / max(c.max(), 1e-30) for c in curves],
        [f"block {l}" for l in range(net.cfg.n_blocks)],
        f"per-block sweep profiles (normalized), step {step}",
        xlabel="time input",
        ylabel="normalized feature distance",
        logx=True,
    )
    return {
        f"layer_sweep_step{step}.csv": csv,
        f"layer_sweep_summary_step{step}.csv": summary,
        f"layer_sweep_step{step}.png": fig,
    }


def _cmd_analyze_feature_pca(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    s = cfg["schedule"]
    dense = make_schedule(s["kind"], cfg["analysis"]["dense_n"], s["sigma_min"], s["sigma_max"], s["rho"])
    results = analysis.feature_trajectory_pca(
        net, dense, kind=cfg["analysis"]["dense_solver"], seed=cfg["run"]["seed"],
        n=cfg["analysis"]["dense_batch"],
    )
    rows = []
    summary_rows = []
    for layer, res in enumerate(results):
        rows.extend(
            (layer, c + 1, r, cum)
            for c, (r, cum) in enumerate(zip(res.ratios.tolist(), res.cumulative.tolist()))
        )
        summary_rows.append((layer, float(res.cumulative[min(1, len(res.cumulative) - 1)]), res.components_for(0.9)))
    csv = reports.write_csv(out / "feature_pca.csv", ["layer", "component", "ratio", "cumulative"], rows)
    summary = reports.write_csv(
        out / "feature_pca_summary.csv", ["layer", "pc12_cumulative", "components_for_90pct"], summary_rows
    )
    fig = reports.plot_cumulative(
        out / "feature_pca.png",
        [res.cumulative[:10] for res in results],
        [f"block {l}" for l in range(len(results))],
        "feature-trajectory PCA, cumulative variance",
    )
    return {"feature_pca.csv": csv, "feature_pca_summary.csv": summary, "feature_pca.png": fig}


def _cmd_analyze_film(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    ts = load_teachers(_require(_artifact_path(cfg, "teachers")[0]))
    _check_backbone("teacher set", ts.backbone_fingerprint, net)
    step = cfg["analysis"]["step"]
    layer = cfg["analysis"]["layer"]
    sweep = analysis.film_capacity_sweep(
        net, ts, step, layer, n_taus=cfg["analysis"]["film_taus"], iters=cfg["analysis"]["film_iters"]
    )
    csv = reports.write_csv(
        out / f"film_capacity_step{step}_layer{layer}.csv",
        ["tau", "pre_l1", "post_l1"],
        zip(sweep.taus.tolist(), sweep.pre.tolist(), sweep.post.tolist()),
    )
    summary = reports.write_csv(
        out / f"film_capacity_summary_step{step}_layer{layer}.csv",
        ["step", "layer", "pre_mean", "pre_var", "post_mean", "post_var"],
        [(step, layer, sweep.pre_mean, sweep.pre_var, sweep.post_mean, sweep.post_var)],
    )
    fig = reports.plot_capacity(
        out / f"film_capacity_step{step}_layer{layer}.png", sweep.taus, sweep.pre, sweep.post,
        f"FiLM refit capacity, step {step}, block {layer}",
    )
    return {
        f"film_capacity_step{step}_layer{layer}.csv": csv,
        f"film_capacity_summary_step{step}_layer{layer}.csv": summary,
        f"film_capacity_step{step}_layer{layer}.png": fig,
    }


def _cmd_analyze_emb_pca(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    bank_path = _require(_artifact_path(cfg, "bank")[0])
    bank = load_bank(bank_path)
    _check_backbone("bank", bank.backbone_fingerprint, net)
    res = analysis.embedding_pca(net, bank, n_grid=cfg["analysis"]["grid_points"])
    arms = [
        ("vanilla-embeddings", res.vanilla_embeddings),
        ("vanilla-films", res.vanilla_films),
        ("bank-embeddings", res.bank_embeddings),
        ("bank-films", res.bank_films),
    ]
    rows = []
    for name, pr in arms:
        if pr is None:
            continue
        rows.extend(
            (name, c + 1, r, cum)
            for c, (r, cum) in enumerate(zip(pr.ratios.tolist(), pr.cumulative.tolist()))
        )
    csv = reports.write_csv(out / "emb_pca.csv", ["arm", "component", "ratio", "cumulative"], rows)
    fig = reports.plot_cumulative(
        out / "emb_pca.png",
        [pr.cumulative[:10] for _, pr in arms if pr is not None],
        [name for name, pr in arms if pr is not None],
        "embedding and FiLM-parameter PCA",
    )
    return {"emb_pca.csv": csv, "emb_pca.png": fig, "bank": bank_path}


def _gain_subsets(cfg, n_steps: int) -> list[tuple[int, ...]]:
    subsets: list[tuple[int, ...]] = [()]
    subsets.extend((i,) for i in range(n_steps))
    subsets.append(tuple(range(n_steps)))
    custom = tuple(sorted(cfg["analysis"]["gain_subsets"]))
    if custom and custom not in subsets:
        subsets.append(custom)
    return subsets


def _cmd_analyze_gain_drop(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    bank_path = _require(_artifact_path(cfg, "bank")[0])
    bank = load_bank(bank_path)
    schedule = _schedule(cfg)
    _check_backbone("bank", bank.backbone_fingerprint, net)
    _check_schedule("bank", bank.schedule_fingerprint, schedule)
    results = analysis.gain_drop(
        net,
        bank,
        schedule,
        _reference_draws(cfg),
        _gain_subsets(cfg, bank.n_steps),
        kind=cfg["solver"]["kind"],
        n_samples=cfg["eval"]["n_samples"],
        seed=cfg["run"]["seed"],
        metric=cfg["analysis"]["metric"],
        n_proj=cfg["eval"]["n_proj"],
    )
    rows = [
        (";".join(map(str, r.subset)) or "-", r.m_empty, r.m_subset, r.m_complement, r.m_full, r.gain, r.drop)
        for r in results
    ]
    csv = reports.write_csv(
        out / "gain_drop.csv",
        ["subset", "m_empty", "m_subset", "m_complement", "m_full", "gain", "drop"],
        rows,
    )
    singles = [r for r in results if len(r.subset) == 1]
    fig = reports.plot_bars(
        out / "gain_drop.png",
        [f"step {r.subset[0]}" for r in singles],
        np.array([r.gain for r in singles]),
        "single-step gains",
        "metric improvement",
    )
    return {"gain_drop.csv": csv, "gain_drop.png": fig, "bank": bank_path}


def _cmd_analyze_step_transfer(cfg) -> dict[str, Path]:
    out = _out_dir(cfg)
    net = load_backbone(_require(_artifact_path(cfg, "backbone")[0]))
    bank_path = _require(_artifact_path(cfg, "bank")[0])
    bank = load_bank(bank_path)
    schedule = _schedule(cfg)
    _check_backbone("bank", bank.backbone_fingerprint, net)
    _check_schedule("bank", bank.schedule_fingerprint, schedule)
    k = cfg["analysis"]["transfer_k"]
    with_bank, vanilla = analysis.step_transfer(
        net,
        bank,
        schedule,
        k,
        _reference_draws(cfg),
        kind=cfg["solver"]["kind"],
        n_samples=cfg["eval"]["n_samples"],
        seed=cfg["run"]["seed"],
        metric=cfg["analysis"]["metric"],
        n_proj=cfg["eval"]["n_proj"],
    )
    csv = reports.write_csv(
        out / "step_transfer.csv",
        ["k", "n_intervals_refined", "metric", "with_bank", "vanilla"],
        [(k, schedule.n_intervals * k, cfg["analysis"]["metric"], with_bank, vanilla)],
    )
    fig = reports.plot_bars(
        out / "step_transfer.png",
        ["with bank", "vanilla"],
        np.array([with_bank, vanilla]),
        f"transfer onto the {k}x refined schedule",
        cfg["analysis"]["metric"],
    )
    return {"step_transfer.csv": csv, "step_transfer.png": fig, "bank": bank_path}


# --- entry point ------------------------------------------------------------------

_COMMANDS = {
    "train-backbone": _cmd_train_backbone,
    "gen-teachers": _cmd_gen_teachers,
    "train-mteo": _cmd_train_mteo,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "analyze-sweep": _cmd_analyze_sweep,
    "analyze-layer-sweep": _cmd_analyze_layer_sweep,
    "analyze-feature-pca": _cmd_analyze_feature_pca,
    "analyze-film": _cmd_analyze_film,
    "analyze-emb-pca": _cmd_analyze_emb_pca,
    "analyze-gain-drop": _cmd_analyze_gain_drop,
    "analyze-step-transfer": _cmd_analyze_step_transfer,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fewstep", description="few-step sampler laboratory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="sectioned key = value config file")
    common.add_argument(
        "--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config entry (repeatable)"
    )
    common.add_argument("--out", metavar="DIR", help="output directory (overrides run.out)")
    common.add_argument("--seed", type=int, metavar="U64", help="global seed (overrides run.seed)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train-backbone", "gen-teachers", "train-mteo", "sample", "eval"):
        sub.add_parser(name, parents=[common])
    an = sub.add_parser("analyze", parents=[common])
    an.add_argument("what", choices=ANALYSES)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = args.command if args.command != "analyze" else f"analyze-{args.what}"
    try:
        cfg = _resolve_config(args)
        t0 = time.perf_counter()
        artifacts = _COMMANDS[command](cfg)
        _write_manifest(cfg, command, artifacts, time.perf_counter() - t0)
    except MissingArtifact as exc:
        print(f"missing artifact: {exc.path}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
