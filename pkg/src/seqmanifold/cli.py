"""Command-line front end: plan, learn, eval, augment-preview, sweep, ablate.

Exit codes: 0 success, 1 configuration error, 2 planner failure,
3 training divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .configio import (
    ConfigError,
    check_schema_version,
    config_to_jsonable,
    load_dataset,
    load_json,
    load_model,
    load_task,
    save_dataset,
    save_model,
    write_manifest,
    write_table,
)
from .datasets import KINDS, DatasetSpec, generate
from .evaluation import evaluate_model, run_ablation
from .learning.augment import augment
from .learning.charts import build_charts, default_epsilon_aug
from .learning.osa import osa_align
from .learning.training import TrainingConfig, TrainingDivergence, train
from .planner import plan_sequence, plan_sequence_greedy, plan_single_tree
from .svgplot import path_projection_plot, sweep_plot

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PLANNER = 2
EXIT_DIVERGED = 3

_PLANNERS = {
    "standard": plan_sequence,
    "greedy": plan_sequence_greedy,
    "single_tree": plan_single_tree,
}


def _out_dir(args) -> Path:
    root = os.environ.get("SEQMANIFOLD_OUT", ".")
    out = Path(args.out) if args.out else Path(root) / f"run-{int(time.time())}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s != ""]
    except ValueError as e:
        raise ConfigError(f"--seeds: {e}") from e


def _parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--params expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _apply_overrides(obj, overrides: dict):
    valid = {f.name for f in dataclasses.fields(obj)}
    unknown = set(overrides) - valid
    if unknown:
        raise ConfigError(f"unknown parameter overrides: {sorted(unknown)}")
    return dataclasses.replace(obj, **overrides)


def _training_config(doc: dict) -> TrainingConfig:
    cfg = doc.get("training", {})
    try:
        return TrainingConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()})
    except TypeError as e:
        raise ConfigError(f"training config: {e}") from e


def _dataset_from_config(doc: dict, where: str):
    if "dataset_file" in doc:
        kind = doc.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"{where}: 'kind' must accompany dataset_file")
        return load_dataset(doc["dataset_file"]), kind, None
    ds = doc.get("dataset")
    if not isinstance(ds, dict):
        raise ConfigError(f"{where}: need 'dataset' object or 'dataset_file'")
    try:
        spec = DatasetSpec(
            kind=ds.get("kind", "sphere"),
            n=int(ds.get("n", 2000)),
            noise=float(ds.get("noise", 0.0)),
            seed=int(ds.get("seed", 0)),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e
    return generate(spec), spec.kind, spec


# -- commands -----------------------------------------------------------------


def cmd_plan(args) -> int:
    task, params, variant = load_task(args.task)
    if args.variant:
        variant = args.variant
    params = _apply_overrides(params, _parse_overrides(args.params))
    seeds = _parse_seeds(args.seeds) if args.seeds else [params.seed]
    out = _out_dir(args)
    planner = _PLANNERS[variant]
    records = []
    artifacts = []
    any_failure = False
    for seed in seeds:
        run_params = dataclasses.replace(params, seed=seed)
        result = planner(task, run_params)
        rec = {
            "seed": seed,
            "success": result.success,
            "cost": result.cost if result.success else None,
            "nodes_per_stage": result.nodes_per_stage,
            "extensions": result.extensions,
            "failure_stage": result.failure_stage,
            "wall_time": result.elapsed,
            "n_waypoints": len(result.waypoints),
        }
        records.append(rec)
        if result.success:
            wp_path = out / f"waypoints_{seed}.txt"
            save_dataset(np.asarray(result.waypoints), wp_path)
            artifacts.append(wp_path)
            svg_path = out / f"path_{seed}.svg"
            path_projection_plot(result.waypoints, svg_path, obstacles=task.free.obstacles)
            artifacts.append(svg_path)
        else:
            any_failure = True
    costs = [r["cost"] for r in records if r["success"]]
    summary = {
        "command": "plan",
        "variant": variant,
        "task_file": str(args.task),
        "runs": records,
        "mean_cost": float(np.mean(costs)) if costs else None,
        "std_cost": float(np.std(costs)) if costs else None,
        "success_rate": sum(r["success"] for r in records) / len(records),
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w") as f:
        json.dump(summary, f, indent=2)
    artifacts.append(summary_path)
    write_manifest(out, {"params": config_to_jsonable(params), "variant": variant}, seeds, artifacts)
    print(json.dumps(summary, indent=2))
    return EXIT_PLANNER if any_failure else EXIT_OK


def cmd_learn(args) -> int:
    doc = load_json(args.config)
    check_schema_version(doc, str(args.config))
    data, kind, spec = _dataset_from_config(doc, str(args.config))
    cfg = _training_config(doc)
    cfg = _apply_overrides(cfg, _parse_overrides(args.params))
    if args.seeds:
        cfg = dataclasses.replace(cfg, seed=_parse_seeds(args.seeds)[0])
    out = _out_dir(args)
    try:
        result = train(data, cfg)
    except TrainingDivergence as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    model_path = out / "model.json"
    save_model(result.model, model_path)
    hist_path = out / "history.csv"
    keys = sorted(result.history[0].keys())
    write_table(hist_path, ["epoch"] + keys, [
        [i] + [row.get(k, "") for k in keys] for i, row in enumerate(result.history)
    ])
    metrics = evaluate_model(result.model, kind, train_points=data, seed=cfg.seed)
    metrics_path = out / "metrics.json"
    with open(metrics_path, "w") as f:
        json.dump(metrics.as_dict(), f, indent=2)
    write_manifest(
        out,
        {
            "training": config_to_jsonable(cfg),
            "dataset": config_to_jsonable(spec) if spec else {"file": doc.get("dataset_file")},
            "epochs_run": result.epochs_run,
            "intrinsic_dim": result.intrinsic_dim,
            "epsilon_aug": result.epsilon_aug,
        },
        [cfg.seed],
        [model_path, hist_path, metrics_path],
    )
    print(json.dumps(metrics.as_dict(), indent=2))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    if args.kind not in KINDS:
        raise ConfigError(f"--kind must be one of {KINDS}")
    train_points = load_dataset(args.dataset) if args.dataset else None
    metrics = evaluate_model(
        model, args.kind, train_points=train_points, n_samples=args.samples, seed=args.seed
    )
    print(json.dumps(metrics.as_dict(), indent=2))
    if args.out:
        out = _out_dir(args)
        path = out / "metrics.json"
        with open(path, "w") as f:
            json.dump(metrics.as_dict(), f, indent=2)
        write_manifest(out, {"model": str(args.model), "kind": args.kind}, [args.seed], [path])
    return EXIT_OK


def cmd_augment_preview(args) -> int:
    doc = load_json(args.config)
    check_schema_version(doc, str(args.config))
    data, kind, spec = _dataset_from_config(doc, str(args.config))
    cfg = _training_config(doc)
    out = _out_dir(args)
    rng = np.random.default_rng(cfg.seed)
    charts, l = build_charts(data, cfg.k_neighbors, cfg.intrinsic_dim)
    if cfg.use_osa:
        charts, _ = osa_align(data, charts, H=cfg.osa_neighbors, seed=cfg.seed)
    eps = cfg.epsilon_aug if cfg.epsilon_aug is not None else default_epsilon_aug(charts)
    samples = augment(data, charts, cfg.i_max, eps, cfg.fractions, rng)
    rows = np.array(
        [[*s.point, s.label, s.level, s.base_index] for s in samples]
    )
    points_path = out / "augmented.txt"
    save_dataset(rows, points_path)
    summary = {
        "kind": kind,
        "n_base": len(data),
        "n_samples": len(samples),
        "intrinsic_dim": l,
        "epsilon_aug": eps,
        "levels": cfg.i_max,
        "rejected_levels": len(data) * cfg.i_max - len(samples),
    }
    summary_path = out / "summary.json"
    with open(summary_path, "w") as f:
        json.dump(summary, f, indent=2)
    write_manifest(out, {"training": config_to_jsonable(cfg)}, [cfg.seed], [points_path, summary_path])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        doc = load_json(args.config)
        where = str(args.config)
        check_schema_version(doc, where)
    else:
        doc, where = {"schema_version": 1}, "--sweep"
    if args.sweep:
        if "=" not in args.sweep:
            raise ConfigError("--sweep expects axis=v1,v2,...")
        axis_name, values_text = args.sweep.split("=", 1)
        doc["axis"] = axis_name
        doc["values"] = [json.loads(v) for v in values_text.split(",")]
    if args.task:
        doc["task"] = args.task
    if args.seeds:
        doc["seeds"] = _parse_seeds(args.seeds)
    axis = doc.get("axis")
    values = doc.get("values")
    seeds = doc.get("seeds", [0])
    if axis not in ("rho", "m", "i_max"):
        raise ConfigError(f"{where}: sweep axis must be rho, m or i_max")
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{where}: 'values' must be a non-empty list")
    out = _out_dir(args)
    rows = []
    if axis in ("rho", "m"):
        if "task" not in doc:
            raise ConfigError(f"{where}: planner sweeps need a 'task' file")
        task_path = Path(doc["task"])
        if args.config and not task_path.is_absolute():
            task_path = Path(args.config).parent / task_path
        task, params, variant = load_task(task_path)
        planner = _PLANNERS[variant]
        trials = [(value, seed) for value in values for seed in seeds]
        for value, seed in trials:
            p = dataclasses.replace(
                params, seed=seed, **{axis: int(value) if axis == "m" else float(value)}
            )
            res = planner(task, p)
            rows.append([axis, value, seed, res.success, res.cost if res.success else "", res.elapsed])
        header = ["axis", "value", "seed", "success", "cost", "wall_time"]
        score_col = 4
    else:
        cfg = _training_config(doc)
        for value in values:
            for seed in seeds:
                c = dataclasses.replace(cfg, i_max=int(value), seed=seed)
                data, kind, _ = _dataset_from_config(doc, where)
                try:
                    result = train(data, c)
                except TrainingDivergence as e:
                    print(f"training diverged: {e}", file=sys.stderr)
                    return EXIT_DIVERGED
                metrics = evaluate_model(result.model, kind, seed=seed)
                rows.append(["i_max", value, seed, True, metrics.P, ""])
        header = ["axis", "value", "seed", "success", "P", "wall_time"]
        score_col = 4
    table_path = out / "sweep.csv"
    write_table(table_path, header, rows)
    means, stds = [], []
    for value in values:
        vals = [r[score_col] for r in rows if r[1] == value and r[score_col] != ""]
        means.append(float(np.mean(vals)) if vals else float("nan"))
        stds.append(float(np.std(vals)) if vals else float("nan"))
    plot_path = out / "sweep.svg"
    sweep_plot([float(v) for v in values], means, stds, plot_path, title=f"sweep over {axis}")
    write_manifest(out, {"sweep": doc}, seeds, [table_path, plot_path])
    print(json.dumps({"axis": axis, "values": values, "means": means, "stds": stds}, indent=2))
    return EXIT_OK


def cmd_ablate(args) -> int:
    doc = load_json(args.config)
    where = str(args.config)
    check_schema_version(doc, where)
    ds = doc.get("dataset")
    if not isinstance(ds, dict):
        raise ConfigError(f"{where}: ablation needs a 'dataset' object")
    spec = DatasetSpec(
        kind=ds.get("kind", "sphere"),
        n=int(ds.get("n", 2000)),
        noise=float(ds.get("noise", 0.0)),
        seed=int(ds.get("seed", 0)),
    )
    cfg = _training_config(doc)
    variants = doc.get("variants", ["none", "no_augmentation", "no_pair_losses", "no_osa"])
    seeds = doc.get("seeds", [0, 1, 2])
    out = _out_dir(args)
    try:
        rows = run_ablation(spec, cfg, variants=variants, seeds=seeds)
    except TrainingDivergence as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    table_path = out / "ablation.csv"
    write_table(
        table_path,
        ["variant", "P_mean", "P_std", "per_seed"],
        [[r.variant, r.P_mean, r.P_std, ";".join(f"{p:.2f}" for p in r.per_seed)] for r in rows],
    )
    write_manifest(out, {"ablation": doc}, seeds, [table_path])
    for r in rows:
        print(f"{r.variant:>18}: P = {r.P_mean:.2f} +- {r.P_std:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmanifold",
        description="Sequential manifold planning and constraint learning",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a sequenced-manifold task")
    p.add_argument("--task", required=True, help="task JSON file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--params", nargs="*", help="key=value planner overrides")
    p.add_argument("--variant", choices=list(_PLANNERS))
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("learn", help="train a constraint model from data")
    p.add_argument("--config", required=True, help="learn JSON config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seeds", help="seed (first entry used)")
    p.add_argument("--params", nargs="*", help="key=value training overrides")
    p.set_defaults(fn=cmd_learn)

    p = sub.add_parser("eval", help="score a trained model against ground truth")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--dataset", help="optional training dataset file for mu(train)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("augment-preview", help="emit augmented points without training")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_augment_preview)

    p = sub.add_parser("sweep", help="parameter sweep (rho, m, or i_max)")
    p.add_argument("--config", help="sweep JSON config")
    p.add_argument("--sweep", help="axis=v1,v2,... (overrides the config)")
    p.add_argument("--task", help="task file for planner sweeps")
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("ablate", help="train ablation variants and tabulate P")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
