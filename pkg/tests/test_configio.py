import json

import numpy as np
import pytest

import seqmanifold as sm
from seqmanifold.configio import (
    ConfigError,
    config_to_jsonable,
    load_dataset,
    load_json,
    load_model,
    load_task,
    parse_manifold,
    save_dataset,
    save_model,
    write_manifest,
    write_table,
)
from seqmanifold.learning.mlp import MlpModel


def task_doc():
    return {
        "schema_version": 1,
        "manifolds": [
            {"kind": "plane", "axis": 2, "offset": 0.0},
            {"kind": "point_goal", "target": [1.0, 1.0, 0.0]},
        ],
        "start": [-1.0, -1.0, 0.0],
        "bounds": {"low": [-3, -3, -3], "high": [3, 3, 3]},
        "params": {"m": 100, "seed": 0},
    }


def test_missing_file_reports_path(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_json(tmp_path / "nope.json")


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema_version": 1,\n  oops\n}')
    with pytest.raises(ConfigError, match="bad.json:3"):
        load_json(p)


def test_schema_version_checked(tmp_path):
    doc = task_doc()
    doc["schema_version"] = 99
    p = tmp_path / "task.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="schema_version"):
        load_task(p)


def test_task_round_trip(tmp_path):
    p = tmp_path / "task.json"
    p.write_text(json.dumps(task_doc()))
    task, params, variant = load_task(p)
    assert variant == "standard"
    assert len(task.manifolds) == 2
    assert params.m == 100
    assert np.array_equal(task.start, [-1.0, -1.0, 0.0])
    assert task.free.bounds.low.tolist() == [-3, -3, -3]


def test_task_with_obstacles_and_hooks(tmp_path):
    doc = task_doc()
    doc["manifolds"].insert(1, {"kind": "plane", "axis": 0, "offset": 0.0})
    doc["obstacles"] = [{"low": [0, 0, 0], "high": [1, 1, 1]}]
    doc["hooks"] = [
        {"kind": "add_obstacle", "low": [-1, -1, -1], "high": [-0.5, -0.5, -0.5]},
        {"kind": "identity"},
    ]
    p = tmp_path / "task.json"
    p.write_text(json.dumps(doc))
    task, _, _ = load_task(p)
    assert len(task.free.obstacles) == 1
    assert len(task.hooks) == 2
    grown = task.hooks[0](task.free, np.zeros(3))
    assert len(grown.obstacles) == 2


def test_unknown_manifold_kind(tmp_path):
    with pytest.raises(ConfigError, match="unknown manifold kind"):
        parse_manifold({"kind": "torus"})


def test_manifold_kinds_parse():
    sphere = parse_manifold({"kind": "sphere", "radius": 2.0, "center": [1, 0, 0]})
    assert sm.evaluate(sphere, np.array([3.0, 0, 0]))[0] == pytest.approx(0.0)
    cyl = parse_manifold({"kind": "cylinder", "radius": 2.0, "coeff": 0.25})
    assert sm.evaluate(cyl, np.array([2.0, 0, 5.0]))[0] == pytest.approx(0.0)
    par = parse_manifold({"kind": "paraboloid", "coeffs": [0.1, 0.1], "offset": 2.0})
    assert sm.evaluate(par, np.array([0.0, 0, 2.0]))[0] == pytest.approx(0.0)
    chain_doc = {
        "axes": [[0, 0, 1], [0, 1, 0], [0, 1, 0]],
        "offsets": [[1, 0, 0], [1, 0, 0], [1, 0, 0]],
    }
    upright = parse_manifold({"kind": "upright", "chain": chain_doc})
    assert upright.ambient_dim == 3
    grasp = parse_manifold({"kind": "grasp", "chain": chain_doc, "target": [3.0, 0, 0]})
    assert np.allclose(sm.evaluate(grasp, np.zeros(3)), 0.0, atol=1e-12)
    handover = parse_manifold(
        {"kind": "handover", "chain_a": chain_doc, "chain_b": chain_doc}
    )
    assert np.allclose(sm.evaluate(handover, np.array([0.1, 0.2, 0.3])), 0.0)


def test_learned_manifold_from_file(tmp_path, rng):
    model = MlpModel.init([3, 6, 1], rng)
    save_model(model, tmp_path / "model.json")
    manifold = parse_manifold({"kind": "learned", "model": "model.json"}, base_dir=tmp_path)
    q = rng.normal(size=3)
    assert np.allclose(sm.evaluate(manifold, q), model.forward(q))


def test_model_round_trip_bit_identical(tmp_path, rng):
    model = MlpModel.init([3, 36, 24, 18, 10, 1], rng)
    save_model(model, tmp_path / "m.json")
    clone = load_model(tmp_path / "m.json")
    for a, b in zip(model.parameters(), clone.parameters()):
        assert np.array_equal(a, b)


def test_dataset_round_trip_bit_identical(tmp_path, rng):
    data = rng.normal(size=(50, 3))
    save_dataset(data, tmp_path / "d.txt")
    clone = load_dataset(tmp_path / "d.txt")
    assert np.array_equal(data, clone)


def test_dataset_rejects_non_finite(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("1.0 2.0 nan\n")
    with pytest.raises(ConfigError, match="non-finite"):
        load_dataset(p)


def test_manifest_records_hashes(tmp_path):
    a = tmp_path / "a.txt"
    a.write_text("hello")
    path = write_manifest(tmp_path, {"x": 1}, [0, 1], [a])
    doc = json.loads(path.read_text())
    assert doc["seeds"] == [0, 1]
    assert "a.txt" in doc["artifacts"]
    assert len(doc["artifacts"]["a.txt"]) == 64


def test_write_table_and_floats_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    write_table(p, ["a", "b"], [[1, 0.1], [2, 1.0 / 3.0]])
    lines = p.read_text().strip().split("\n")
    assert lines[0] == "a,b"
    assert float(lines[2].split(",")[1]) == 1.0 / 3.0


def test_config_to_jsonable_handles_dataclasses():
    params = sm.PlannerParams(m=10)
    out = config_to_jsonable(params)
    assert out["m"] == 10
    assert json.dumps(out)  # round-trippable
