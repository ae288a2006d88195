import numpy as np
import pytest
from scipy.spatial import cKDTree

from seqmanifold.datasets import DatasetSpec, generate
from seqmanifold.learning.augment import augment, nearest_neighbor_pairs
from seqmanifold.learning.charts import build_charts
from seqmanifold.learning.losses import (
    LossBatch,
    build_loss_batch,
    build_static_sets,
    compute_losses,
)
from seqmanifold.learning.mlp import MlpModel
from seqmanifold.learning.osa import osa_align


def _empty_batch_like(n):
    z = np.zeros((0, n))
    return dict(
        norm_points=z, norm_labels=np.zeros(0), reflection_plus=z, reflection_minus=z,
        fraction_high=z, fraction_low=z, similar_a=z, similar_b=z,
        align_points=z, align_tangent=np.zeros((0, n, 0)), align_normal_proj=np.zeros((0, n, n)),
    )


def linear_model(w):
    # single linear layer: h(q) = w . q
    return MlpModel([3, 1], weights=[np.asarray(w, dtype=float)[None, :]], biases=[np.zeros(1)])


def test_exact_signed_fit_zeroes_norm_and_reflection():
    model = linear_model([0.0, 0.0, 1.0])  # h = q_z
    base = np.array([[0.3, -0.2, 0.0], [0.0, 0.5, 0.0]])
    u = np.array([0.0, 0.0, 1.0])
    labels = np.array([0.4, 0.4])
    fields = _empty_batch_like(3)
    fields.update(
        norm_points=np.concatenate([base + 0.4 * u, base - 0.4 * u]),
        norm_labels=np.concatenate([labels, labels]),
        reflection_plus=base + 0.4 * u,
        reflection_minus=base - 0.4 * u,
    )
    values, _ = compute_losses(model, LossBatch(**fields))
    assert values.norm == pytest.approx(0.0, abs=1e-12)
    assert values.reflection == pytest.approx(0.0, abs=1e-24)


def test_identical_similar_pairs_give_zero_loss(rng):
    model = MlpModel.init([3, 6, 2], rng)
    pts = rng.normal(size=(11, 3))
    fields = _empty_batch_like(3)
    fields.update(similar_a=pts, similar_b=pts.copy())
    values, _ = compute_losses(model, LossBatch(**fields))
    assert values.similar == 0.0


def test_empty_batch_rejected(rng):
    model = MlpModel.init([3, 4, 1], rng)
    with pytest.raises(ValueError, match="empty"):
        compute_losses(model, LossBatch(**_empty_batch_like(3)))


def test_align_loss_zero_for_matching_jacobian():
    # h = q_z has J = e_z everywhere; charts whose normal is e_z give zero
    model = linear_model([0.0, 0.0, 1.0])
    pts = np.array([[0.1, 0.2, 0.0], [0.5, -0.5, 0.0]])
    T = np.zeros((2, 3, 2))
    T[:, 0, 0] = 1.0
    T[:, 1, 1] = 1.0
    VN = np.zeros((2, 3, 1))
    VN[:, 2, 0] = 1.0
    P = np.broadcast_to(np.eye(3), (2, 3, 3)) - VN @ np.swapaxes(VN, 1, 2)
    fields = _empty_batch_like(3)
    fields.update(align_points=pts, align_tangent=T, align_normal_proj=P)
    values, _ = compute_losses(model, LossBatch(**fields))
    assert values.align == pytest.approx(0.0, abs=1e-24)
    # a rotated normal produces a positive alignment loss
    VN_bad = np.zeros((2, 3, 1))
    VN_bad[:, 0, 0] = 1.0
    T_bad = np.zeros((2, 3, 2))
    T_bad[:, 1, 0] = 1.0
    T_bad[:, 2, 1] = 1.0
    fields.update(
        align_tangent=T_bad,
        align_normal_proj=np.broadcast_to(np.eye(3), (2, 3, 3)) - VN_bad @ np.swapaxes(VN_bad, 1, 2),
    )
    values_bad, _ = compute_losses(model, LossBatch(**fields))
    assert values_bad.align > 0.5


def sphere_batch(n_points=60, seed=0, i_max=2):
    data = generate(DatasetSpec("sphere", n_points, seed=seed))
    charts, l = build_charts(data, K=8)
    charts, _ = osa_align(data, charts, H=8, steps=40)
    rng = np.random.default_rng(seed)
    samples = augment(data, charts, i_max, 0.12, rng=rng)
    partners = nearest_neighbor_pairs(data)
    batch = build_loss_batch(
        samples, data, charts, partners, rng, i_max, 0.12, nn_tree=cKDTree(data)
    )
    return batch


@pytest.mark.parametrize("seed", [0, 1])
def test_every_term_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed + 100)
    model = MlpModel.init([3, 7, 5, 1], rng)
    batch = sphere_batch(seed=seed)
    values, grads, per_term = compute_losses(model, batch, per_term_grads=True)
    flat0 = model.flat_parameters()
    h = 1e-6
    for name in ("norm", "reflection", "fraction", "similar", "align"):
        analytic = np.concatenate([g.ravel() for g in per_term[name]])
        fd = np.zeros_like(flat0)
        for i in range(len(flat0)):
            f = flat0.copy()
            f[i] += h
            model.set_flat_parameters(f)
            up = getattr(compute_losses(model, batch)[0], name)
            f[i] -= 2 * h
            model.set_flat_parameters(f)
            dn = getattr(compute_losses(model, batch)[0], name)
            fd[i] = (up - dn) / (2 * h)
        model.set_flat_parameters(flat0)
        assert np.allclose(analytic, fd, rtol=1e-4, atol=1e-7), name


def test_total_gradient_combines_weights(rng):
    model = MlpModel.init([3, 6, 1], rng)
    batch = sphere_batch(seed=3)
    weights = {"norm": 2.0, "reflection": 0.5, "fraction": 1.5, "similar": 0.0, "align": 3.0}
    values, grads, per_term = compute_losses(model, batch, weights, per_term_grads=True)
    combo = [np.zeros_like(g) for g in grads]
    for name, w in weights.items():
        for c, g in zip(combo, per_term[name]):
            c += w * g
    for a, b in zip(grads, combo):
        assert np.allclose(a, b, atol=1e-12)
    assert values.total == pytest.approx(
        2.0 * values.norm + 0.5 * values.reflection + 1.5 * values.fraction + 3.0 * values.align
    )


def test_static_sets_reused_across_draws():
    data = generate(DatasetSpec("sphere", 80, seed=9))
    charts, _ = build_charts(data, K=8)
    charts, _ = osa_align(data, charts, H=8, steps=40)
    rng = np.random.default_rng(0)
    samples = augment(data, charts, 2, 0.1, rng=rng)
    partners = nearest_neighbor_pairs(data)
    static = build_static_sets(samples, data, charts)
    b1 = build_loss_batch(samples, data, charts, partners, rng, 2, 0.1, static=static)
    b2 = build_loss_batch(samples, data, charts, partners, rng, 2, 0.1, static=static)
    assert b1.norm_points is static.norm_points
    assert b2.norm_points is static.norm_points
    # similar pairs differ between draws
    assert b1.similar_a.shape != b2.similar_a.shape or not np.allclose(b1.similar_a, b2.similar_a)
