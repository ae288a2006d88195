"""JSON configuration parsing, file formats, and run manifests.

Every schema carries a `schema_version`; malformed documents raise
ConfigError with the offending path so the CLI can report it and exit
with the config-error status.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .collision import Box, FreeSpace, add_obstacle_hook, identity_hook
from .kinematics import (
    SerialChain,
    grasp_constraint,
    handover_constraint,
    upright_constraint,
)
from .learning.mlp import MlpModel
from .manifolds import Manifold, axis_plane, cylinder, paraboloid, point_goal, sphere
from .planner import PlannerParams, SequencedTask

__all__ = [
    "ConfigError",
    "check_schema_version",
    "load_json",
    "parse_manifold",
    "parse_chain",
    "parse_box",
    "load_task",
    "save_model",
    "load_model",
    "save_dataset",
    "load_dataset",
    "write_manifest",
    "write_table",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from e


def _expect(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return obj[key]


def parse_chain(obj: dict, where: str = "chain") -> SerialChain:
    axes = _expect(obj, "axes", where)
    offsets = _expect(obj, "offsets", where)
    try:
        return SerialChain(
            axes=axes,
            offsets=offsets,
            base_position=np.asarray(obj.get("base_position", [0.0, 0.0, 0.0]), dtype=float),
            base_rotation=np.asarray(obj.get("base_rotation", np.eye(3).tolist()), dtype=float),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def parse_manifold(obj: dict, where: str = "manifold", base_dir: Path | None = None) -> Manifold:
    kind = _expect(obj, "kind", where)
    try:
        if kind == "sphere":
            return sphere(
                radius=float(obj.get("radius", 1.0)),
                center=obj.get("center"),
                dim=int(obj.get("dim", 3)),
            )
        if kind == "paraboloid":
            return paraboloid(
                coeffs=obj.get("coeffs", (0.1, 0.1)), offset=float(obj.get("offset", 2.0))
            )
        if kind == "cylinder":
            return cylinder(
                radius=float(obj.get("radius", 1.0)),
                coeff=float(obj.get("coeff", 1.0)),
                center=obj.get("center", (0.0, 0.0)),
            )
        if kind == "plane":
            return axis_plane(
                axis=int(_expect(obj, "axis", where)),
                offset=float(obj.get("offset", 0.0)),
                dim=int(obj.get("dim", 3)),
            )
        if kind == "point_goal":
            return point_goal(np.asarray(_expect(obj, "target", where), dtype=float))
        if kind == "grasp":
            return grasp_constraint(
                parse_chain(_expect(obj, "chain", where), f"{where}.chain"),
                np.asarray(_expect(obj, "target", where), dtype=float),
            )
        if kind == "handover":
            return handover_constraint(
                parse_chain(_expect(obj, "chain_a", where), f"{where}.chain_a"),
                parse_chain(_expect(obj, "chain_b", where), f"{where}.chain_b"),
            )
        if kind == "upright":
            return upright_constraint(
                parse_chain(_expect(obj, "chain", where), f"{where}.chain")
            )
        if kind == "learned":
            model_path = Path(_expect(obj, "model", where))
            if base_dir is not None and not model_path.is_absolute():
                model_path = base_dir / model_path
            from .learning.learned import learned_manifold

            return learned_manifold(load_model(model_path))
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e
    raise ConfigError(f"{where}: unknown manifold kind {kind!r}")


def parse_box(obj: dict, where: str = "box") -> Box:
    try:
        return Box(
            low=np.asarray(_expect(obj, "low", where), dtype=float),
            high=np.asarray(_expect(obj, "high", where), dtype=float),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from e


def _parse_hook(obj, where: str):
    if obj is None:
        return None
    kind = _expect(obj, "kind", where)
    if kind == "identity":
        return identity_hook
    if kind == "add_obstacle":
        return add_obstacle_hook(parse_box(obj, where))
    raise ConfigError(f"{where}: unknown hook kind {kind!r}")


def check_schema_version(doc: dict, where: str):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{where}: schema_version must be {SCHEMA_VERSION}, got {version!r}")


def load_task(path) -> tuple[SequencedTask, PlannerParams, str]:
    """Task file -> (task, params, variant)."""
    path = Path(path)
    doc = load_json(path)
    where = str(path)
    check_schema_version(doc, where)
    manifolds = _expect(doc, "manifolds", where)
    if not isinstance(manifolds, list) or len(manifolds) < 2:
        raise ConfigError(f"{where}: 'manifolds' must list at least two entries")
    ms = [
        parse_manifold(m, f"{where}.manifolds[{i}]", base_dir=path.parent)
        for i, m in enumerate(manifolds)
    ]
    bounds = parse_box(_expect(doc, "bounds", where), f"{where}.bounds")
    obstacles = tuple(
        parse_box(b, f"{where}.obstacles[{i}]") for i, b in enumerate(doc.get("obstacles", []))
    )
    hooks = None
    if "hooks" in doc:
        hooks = tuple(
            _parse_hook(h, f"{where}.hooks[{i}]") for i, h in enumerate(doc["hooks"])
        )
    start = np.asarray(_expect(doc, "start", where), dtype=float)
    try:
        task = SequencedTask(
            manifolds=tuple(ms),
            start=start,
            free=FreeSpace(bounds=bounds, obstacles=obstacles),
            hooks=hooks,
        )
        params = PlannerParams(**doc.get("params", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e
    variant = doc.get("variant", "standard")
    if variant not in ("standard", "greedy", "single_tree"):
        raise ConfigError(f"{where}: unknown variant {variant!r}")
    return task, params, variant


# -- model / dataset files ----------------------------------------------------


def save_model(model: MlpModel, path):
    with open(path, "w") as f:
        json.dump(model.to_dict(), f)


def load_model(path) -> MlpModel:
    doc = load_json(path)
    check_schema_version(doc, str(path))
    try:
        return MlpModel.from_dict(doc)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def save_dataset(points: np.ndarray, path):
    np.savetxt(path, np.atleast_2d(points), fmt="%.17g")


def load_dataset(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    data = np.loadtxt(path, ndmin=2)
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"{path}: dataset contains non-finite values")
    return data


# -- manifests and tables ------------------------------------------------------


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_dir, resolved_config: dict, seeds, artifacts):
    """Record the resolved configuration, seeds, and artifact hashes."""
    out_dir = Path(out_dir)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": resolved_config,
        "seeds": list(seeds),
        "artifacts": {
            str(Path(a).relative_to(out_dir)): _sha256(a) for a in artifacts
        },
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path


def write_table(path, header, rows):
    """Delimiter-separated results table with a header row."""
    with open(path, "w") as f:
        f.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_jsonable(obj):
    """Resolve dataclasses/arrays into JSON-encodable structures."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: config_to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
        }
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: config_to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [config_to_jsonable(v) for v in obj]
    return obj
