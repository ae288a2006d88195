import numpy as np
import pytest

from seqmanifold.datasets import DatasetSpec, generate
from seqmanifold.learning.learned import learned_manifold, project_learned
from seqmanifold.learning.mlp import MlpModel
from seqmanifold.learning.training import TrainingConfig, TrainingDivergence, train

import seqmanifold as sm


def tiny_config(**kw):
    base = dict(
        hidden=(12, 8),
        epochs=40,
        batch_size=64,
        k_neighbors=6,
        i_max=2,
        osa_neighbors=6,
        monitor_subspace=0,
        min_epochs=40,
        seed=0,
    )
    base.update(kw)
    return TrainingConfig(**base)


def test_overfit_small_sphere_sample():
    data = generate(DatasetSpec("sphere", 10, seed=0))
    cfg = TrainingConfig(
        hidden=(36, 24, 18, 10),
        epochs=2000,
        batch_size=8,
        learning_rate=1e-2,
        k_neighbors=4,
        i_max=3,
        osa_neighbors=4,
        monitor_subspace=0,
        min_epochs=2000,  # run the full budget; this is a capacity check
        seed=0,
    )
    result = train(data, cfg)
    assert result.history[-1]["total"] <= 1e-3
    assert result.epochs_run <= 2000


def test_history_rows_match_epoch_count():
    data = generate(DatasetSpec("sphere", 60, seed=1))
    cfg = tiny_config(epochs=12, min_epochs=12)
    result = train(data, cfg)
    assert result.epochs_run == 12
    assert len(result.history) == result.epochs_run + 1
    for row in result.history:
        for key in ("norm", "reflection", "fraction", "similar", "align", "total"):
            assert key in row


def test_loss_decreases_overall():
    data = generate(DatasetSpec("sphere", 150, seed=2))
    cfg = tiny_config(epochs=30, min_epochs=30)
    result = train(data, cfg)
    totals = [h["total"] for h in result.history]
    assert totals[-1] < totals[0]
    # windowed means non-increasing up to a small tolerance
    first = np.mean(totals[:5])
    last = np.mean(totals[-5:])
    assert last <= first


def test_divergence_aborts_with_diagnostic():
    data = generate(DatasetSpec("sphere", 60, seed=3))
    cfg = tiny_config(divergence_limit=1e-9, epochs=3)
    with pytest.raises(TrainingDivergence, match="exceeded"):
        train(data, cfg)


def test_model_shape_mismatch_rejected(rng):
    data = generate(DatasetSpec("sphere", 60, seed=4))
    wrong = MlpModel.init([4, 6, 1], rng)
    with pytest.raises(ValueError, match="model maps"):
        train(data, tiny_config(), model=wrong)


def test_monitored_residual_recorded():
    data = generate(DatasetSpec("sphere", 60, seed=5))
    cfg = tiny_config(epochs=3, min_epochs=3, monitor_subspace=10)
    result = train(data, cfg)
    assert all("subspace_residual" in row for row in result.history)
    assert all(row["subspace_residual"] >= 0.0 for row in result.history)


def test_training_deterministic_per_seed():
    data = generate(DatasetSpec("sphere", 80, seed=6))
    cfg = tiny_config(epochs=8, min_epochs=8)
    a = train(data, cfg)
    b = train(data, cfg)
    for pa, pb in zip(a.model.parameters(), b.model.parameters()):
        assert np.array_equal(pa, pb)
    assert a.history[-1]["total"] == b.history[-1]["total"]


def test_learned_manifold_delegates_bitwise(rng):
    model = MlpModel.init([3, 9, 2], rng)
    manifold = learned_manifold(model)
    q = rng.normal(size=3)
    assert np.array_equal(sm.evaluate(manifold, q), model.forward(q))
    assert np.array_equal(sm.jacobian(manifold, q), model.jacobian(q))
    assert manifold.ambient_dim == 3
    assert manifold.constraint_dim == 2


def test_project_learned_returns_input_when_converged(rng):
    model = MlpModel.init([3, 6, 1], rng)
    q = rng.normal(size=3)
    h0 = model.forward(q)[0]
    target = sm.ProjectionSettings(tolerance=abs(h0) + 1.0)
    assert np.array_equal(project_learned(model, q, target), q)


def test_project_learned_fails_on_flat_model():
    model = MlpModel([3, 4, 1])  # all-zero weights: J == 0 with |h| above tol
    model.biases[-1] = np.array([1.0])
    assert project_learned(model, np.ones(3), sm.ProjectionSettings(tolerance=1e-4)) is None
