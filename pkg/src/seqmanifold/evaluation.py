"""Quality evaluation of learned constraints and the ablation harness.

The projection-success protocol samples random configurations, drives them
onto the learned zero set, and scores the results against the geometric
ground truth: mu is the mean distance of projected points, P the percentage
landing within the 0.1 threshold (projection failures count against P).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import (
    DatasetSpec,
    generate,
    ground_truth_distance,
    metric_mu,
    sampling_bounds,
)
from .learning.learned import learned_manifold
from .learning.mlp import MlpModel
from .learning.training import TrainingConfig, train
from .manifolds import ProjectionSettings, project_batch

__all__ = ["ModelMetrics", "evaluate_model", "AblationRow", "ABLATION_VARIANTS", "run_ablation"]

SUCCESS_THRESHOLD = 0.1


@dataclass
class ModelMetrics:
    kind: str
    mu_train: tuple[float, float] | None
    mu_test: tuple[float, float]
    P: float
    n_samples: int
    n_converged: int

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mu_train_mean": None if self.mu_train is None else self.mu_train[0],
            "mu_train_std": None if self.mu_train is None else self.mu_train[1],
            "mu_test_mean": self.mu_test[0],
            "mu_test_std": self.mu_test[1],
            "P": self.P,
            "n_samples": self.n_samples,
            "n_converged": self.n_converged,
        }


def evaluate_model(
    model: MlpModel,
    kind: str,
    train_points: np.ndarray | None = None,
    n_samples: int = 1000,
    seed: int = 0,
    threshold: float = SUCCESS_THRESHOLD,
    settings: ProjectionSettings = ProjectionSettings(tolerance=1e-4),
) -> ModelMetrics:
    """Project random samples with the learned constraint and score them."""
    rng = np.random.default_rng(seed)
    bounds = sampling_bounds(kind)
    starts = rng.uniform(bounds.low, bounds.high, size=(n_samples, bounds.low.size))
    manifold = learned_manifold(model)
    projected, ok = project_batch(starts, manifold, settings)
    # a projection that escapes the configuration-space box found a spurious
    # zero outside the domain; it counts as a failure
    ok = ok & bounds.contains(projected)
    if ok.any():
        d = ground_truth_distance(kind, projected[ok])
        mu_test = (float(np.mean(d)), float(np.std(d)))
        P = float(100.0 * np.sum(d <= threshold) / n_samples)
    else:
        mu_test = (float("inf"), 0.0)
        P = 0.0
    mu_train = metric_mu(train_points, kind) if train_points is not None else None
    return ModelMetrics(
        kind=kind,
        mu_train=mu_train,
        mu_test=mu_test,
        P=P,
        n_samples=n_samples,
        n_converged=int(np.sum(ok)),
    )


ABLATION_VARIANTS = {
    "none": {},
    "no_augmentation": {"use_augmentation": False, "use_reflection": False,
                        "use_fraction": False, "use_similar": False},
    "no_pair_losses": {"use_reflection": False, "use_fraction": False, "use_similar": False},
    "no_reflection": {"use_reflection": False},
    "no_fraction": {"use_fraction": False},
    "no_similar": {"use_similar": False},
    "no_osa": {"use_osa": False},
}


@dataclass
class AblationRow:
    variant: str
    P_mean: float
    P_std: float
    per_seed: list = field(default_factory=list)


def run_ablation(
    spec: DatasetSpec,
    base_config: TrainingConfig,
    variants=("none", "no_augmentation", "no_pair_losses", "no_osa"),
    seeds=(0, 1, 2),
    n_eval: int = 1000,
) -> list[AblationRow]:
    """Train per variant and seed; tabulate projection success."""
    rows = []
    for variant in variants:
        if variant not in ABLATION_VARIANTS:
            raise ValueError(f"unknown ablation variant {variant!r}")
        scores = []
        for seed in seeds:
            cfg = replace(base_config, seed=seed, **ABLATION_VARIANTS[variant])
            data = generate(replace(spec, seed=seed))
            result = train(data, cfg)
            metrics = evaluate_model(
                result.model, spec.kind, train_points=data, n_samples=n_eval, seed=seed
            )
            scores.append(metrics.P)
        rows.append(
            AblationRow(
                variant=variant,
                P_mean=float(np.mean(scores)),
                P_std=float(np.std(scores)),
                per_seed=scores,
            )
        )
    return rows
