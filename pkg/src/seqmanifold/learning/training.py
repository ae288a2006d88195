"""Training of the implicit-constraint network.

Deterministic per seed: chart building, alignment, augmentation, minibatch
shuffling, and the per-epoch similar-pair draws all flow from one generator.
The optimizer is first-order descent with per-parameter step scaling by
running gradient moments, plus global gradient clipping.  Minibatches are
not just a speed knob: the whole-batch landscape has a stable collapse
equilibrium (the pairwise and alignment losses are all minimized by a zero
output field, and the norm term alone cannot re-split the signs), which the
per-step noise reliably escapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .augment import augment, nearest_neighbor_pairs
from .charts import build_charts, default_epsilon_aug
from .losses import build_loss_batch, build_static_sets, compute_losses, subspace_residual
from .mlp import MlpModel
from .osa import osa_align

__all__ = ["TrainingConfig", "TrainResult", "TrainingDivergence", "train"]


class TrainingDivergence(RuntimeError):
    """Raised when the total loss blows past the divergence limit."""


@dataclass
class TrainingConfig:
    hidden: tuple = (36, 24, 18, 10)
    epochs: int = 150
    batch_size: int | None = 512  # None trains full-batch
    learning_rate: float = 2e-3
    grad_clip: float = 10.0
    k_neighbors: int | None = None  # default max(2n, 20)
    i_max: int = 7
    epsilon_aug: float | None = None  # default sqrt(mean tangent eigenvalue)
    fractions: tuple = (0.5,)
    loss_weights: dict = field(default_factory=dict)
    use_augmentation: bool = True
    use_osa: bool = True
    use_reflection: bool = True
    use_fraction: bool = True
    use_similar: bool = True
    use_align: bool = True
    osa_neighbors: int = 10
    intrinsic_dim: int | None = None
    seed: int = 0
    divergence_limit: float = 1e6
    plateau_window: int = 25
    plateau_rtol: float = 1e-3
    min_epochs: int = 60
    monitor_subspace: int = 50  # residual sample size; 0 disables


@dataclass
class TrainResult:
    model: MlpModel
    history: list  # one dict per epoch, plus the initial state
    charts: list
    intrinsic_dim: int
    epsilon_aug: float
    epochs_run: int
    alignment_graph: object | None = None


def train(
    dataset: np.ndarray, config: TrainingConfig = TrainingConfig(), model: MlpModel | None = None
) -> TrainResult:
    dataset = np.asarray(dataset, dtype=float)
    if dataset.ndim != 2:
        raise ValueError("dataset must be (N, n)")
    N, n = dataset.shape
    rng = np.random.default_rng(config.seed)

    charts, l = build_charts(dataset, config.k_neighbors, config.intrinsic_dim)
    graph = None
    if config.use_osa:
        charts, graph = osa_align(
            dataset, charts, H=config.osa_neighbors, seed=config.seed
        )
    eps_aug = (
        float(config.epsilon_aug)
        if config.epsilon_aug is not None
        else default_epsilon_aug(charts)
    )

    samples = []
    partners = None
    nn_tree = cKDTree(dataset)
    if config.use_augmentation:
        samples = augment(
            dataset, charts, config.i_max, eps_aug, config.fractions, rng
        )
        if config.use_similar:
            partners = nearest_neighbor_pairs(dataset)

    if model is None:
        model = MlpModel.init([n, *config.hidden, l], rng)
    elif model.input_dim != n or model.output_dim != l:
        raise ValueError(
            f"model maps {model.input_dim}->{model.output_dim}, data needs {n}->{l}"
        )

    monitor_idx = (
        rng.choice(N, size=min(config.monitor_subspace, N), replace=False)
        if config.monitor_subspace
        else None
    )

    static = build_static_sets(
        samples,
        dataset,
        charts,
        use_reflection=config.use_reflection,
        use_fraction=config.use_fraction,
        use_align=config.use_align,
    )

    def make_batch():
        return build_loss_batch(
            samples,
            dataset,
            charts,
            partners,
            rng,
            config.i_max,
            eps_aug,
            nn_tree=nn_tree,
            use_similar=config.use_similar and config.use_augmentation,
            static=static,
        )

    params = model.parameters()
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    history: list[dict] = []
    lr = config.learning_rate
    beta1, beta2, eps_opt = 0.9, 0.999, 1e-8
    epochs_run = 0
    step = 0

    def adam_step(grads):
        nonlocal step
        gnorm = math.sqrt(sum(float(np.sum(g**2)) for g in grads))
        if gnorm > config.grad_clip:
            grads = [g * (config.grad_clip / gnorm) for g in grads]
        step += 1
        for p, g, m1, m2 in zip(params, grads, first, second):
            m1 *= beta1
            m1 += (1.0 - beta1) * g
            m2 *= beta2
            m2 += (1.0 - beta2) * g**2
            p -= lr * (m1 / (1.0 - beta1**step)) / (
                np.sqrt(m2 / (1.0 - beta2**step)) + eps_opt
            )

    for epoch in range(config.epochs):
        epoch_batch = make_batch()
        if config.batch_size is None:
            values, grads = compute_losses(model, epoch_batch, config.loss_weights)
            mean_values = values
            adam_step(grads)
        else:
            step_values = []
            for piece in _minibatches(epoch_batch, config.batch_size, rng):
                values, grads = compute_losses(model, piece, config.loss_weights)
                step_values.append(values)
                if not math.isfinite(values.total) or values.total > config.divergence_limit:
                    _raise_divergence(values.total, config.divergence_limit, epoch)
                adam_step(grads)
            mean_values = _mean_values(step_values)
        record = mean_values.as_dict()
        if monitor_idx is not None:
            record["subspace_residual"] = subspace_residual(
                model, dataset, charts, monitor_idx
            )
        history.append(record)
        if not math.isfinite(mean_values.total) or mean_values.total > config.divergence_limit:
            _raise_divergence(mean_values.total, config.divergence_limit, epoch)
        epochs_run = epoch + 1
        if _plateaued(history, config):
            break

    batch = make_batch()
    values, _ = compute_losses(model, batch, config.loss_weights)
    record = values.as_dict()
    if monitor_idx is not None:
        record["subspace_residual"] = subspace_residual(model, dataset, charts, monitor_idx)
    history.append(record)

    return TrainResult(
        model=model,
        history=history,
        charts=charts,
        intrinsic_dim=l,
        epsilon_aug=eps_aug,
        epochs_run=epochs_run,
        alignment_graph=graph,
    )


def _raise_divergence(total, limit, epoch):
    raise TrainingDivergence(
        f"total loss {total:.3g} exceeded {limit:.3g} at epoch {epoch}"
    )


def _mean_values(step_values):
    from .losses import LossValues

    out = LossValues()
    n = max(len(step_values), 1)
    for v in step_values:
        out.norm += v.norm / n
        out.reflection += v.reflection / n
        out.fraction += v.fraction / n
        out.similar += v.similar / n
        out.align += v.align / n
        out.total += v.total / n
    return out


def _minibatches(batch, batch_size: int, rng: np.random.Generator):
    """Split every term's point set into aligned random chunks.

    Chunk counts follow the largest set; smaller sets spread their points
    across the chunks so every step sees every term when possible.
    """
    from dataclasses import replace as _replace

    sizes = {
        "norm": len(batch.norm_points),
        "refl": len(batch.reflection_plus),
        "frac": len(batch.fraction_high),
        "sim": len(batch.similar_a),
        "align": len(batch.align_points),
    }
    largest = max(sizes.values())
    if largest == 0:
        return
    n_chunks = max(1, int(np.ceil(largest / batch_size)))
    perms = {
        name: rng.permutation(size) if size else np.zeros(0, dtype=int)
        for name, size in sizes.items()
    }
    splits = {
        name: np.array_split(perm, n_chunks) if len(perm) else [np.zeros(0, dtype=int)] * n_chunks
        for name, perm in perms.items()
    }
    for c in range(n_chunks):
        idx_norm = splits["norm"][c]
        idx_refl = splits["refl"][c]
        idx_frac = splits["frac"][c]
        idx_sim = splits["sim"][c]
        idx_align = splits["align"][c]
        piece = _replace(
            batch,
            norm_points=batch.norm_points[idx_norm],
            norm_labels=batch.norm_labels[idx_norm],
            reflection_plus=batch.reflection_plus[idx_refl],
            reflection_minus=batch.reflection_minus[idx_refl],
            fraction_high=batch.fraction_high[idx_frac],
            fraction_low=batch.fraction_low[idx_frac],
            similar_a=batch.similar_a[idx_sim],
            similar_b=batch.similar_b[idx_sim],
            align_points=batch.align_points[idx_align],
            align_tangent=batch.align_tangent[idx_align],
            align_normal_proj=batch.align_normal_proj[idx_align],
        )
        if piece.size() == 0:
            continue
        yield piece


def _plateaued(history: list, config: TrainingConfig) -> bool:
    w = config.plateau_window
    if len(history) < max(config.min_epochs, 2 * w):
        return False
    recent = [h["total"] for h in history[-w:]]
    earlier = [h["total"] for h in history[-2 * w : -w]]
    prev, cur = float(np.mean(earlier)), float(np.mean(recent))
    return prev - cur < config.plateau_rtol * max(abs(prev), 1e-12)
