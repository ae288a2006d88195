"""Training losses over augmented batches, with analytic parameter gradients.

Five terms: norm regression on augmented offsets, antisymmetry across
reflection pairs, direction consistency along fraction pairs, equality
across similar pairs at neighboring points, and tangent/normal alignment
of the network Jacobian with the chart bases.  The alignment term uses the
smooth surrogate ||J V_T||_F^2 + ||(I - V_N V_N^T) J^T||_F^2, which shares
its minimizers with the eigenvector-projection criterion but avoids a
decomposition inside the loss; the decomposition-based residual is still
reported as a monitored metric during training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .augment import AugmentedSample
from .mlp import MlpModel

__all__ = [
    "LossBatch",
    "LossValues",
    "build_static_sets",
    "draw_similar_pairs",
    "build_loss_batch",
    "compute_losses",
    "subspace_residual",
]

_NORM_FLOOR = 1e-12


@dataclass
class LossBatch:
    """Point sets consumed by the loss terms; any set may be empty."""

    norm_points: np.ndarray
    norm_labels: np.ndarray
    reflection_plus: np.ndarray
    reflection_minus: np.ndarray
    fraction_high: np.ndarray
    fraction_low: np.ndarray
    similar_a: np.ndarray
    similar_b: np.ndarray
    align_points: np.ndarray
    align_tangent: np.ndarray  # (A, n, n-l)
    align_normal_proj: np.ndarray  # (A, n, n) = I - V_N V_N^T

    def size(self) -> int:
        return (
            len(self.norm_points)
            + 2 * len(self.reflection_plus)
            + 2 * len(self.fraction_high)
            + 2 * len(self.similar_a)
            + len(self.align_points)
        )


@dataclass
class LossValues:
    norm: float = 0.0
    reflection: float = 0.0
    fraction: float = 0.0
    similar: float = 0.0
    align: float = 0.0
    total: float = 0.0

    def as_dict(self) -> dict:
        return {
            "norm": self.norm,
            "reflection": self.reflection,
            "fraction": self.fraction,
            "similar": self.similar,
            "align": self.align,
            "total": self.total,
        }


def _empty(n):
    return np.zeros((0, n))


def build_static_sets(
    samples: list[AugmentedSample],
    dataset: np.ndarray,
    charts,
    include_base: bool = False,
    use_reflection: bool = True,
    use_fraction: bool = True,
    use_align: bool = True,
) -> LossBatch:
    """Point sets that stay fixed across epochs (everything but similar pairs).

    Labels exist only for augmented points; `include_base` optionally adds
    the on-manifold data with label zero (off by default: the norm loss is
    defined on augmented offsets)."""
    dataset = np.asarray(dataset, dtype=float)
    n = dataset.shape[1]
    norm_pts, norm_lbl = [], []
    refl_p, refl_m = [], []
    frac_hi, frac_lo = [], []
    if include_base:
        norm_pts.append(dataset)
        norm_lbl.append(np.zeros(len(dataset)))
    for s in samples:
        norm_pts.append(s.point[None])
        norm_lbl.append([s.label])
        if s.reflection is not None:
            norm_pts.append(s.reflection[None])
            norm_lbl.append([s.label])
            if use_reflection:
                refl_p.append(s.point)
                refl_m.append(s.reflection)
        for _, fpoint, flabel in s.fractions:
            norm_pts.append(fpoint[None])
            norm_lbl.append([flabel])
            if use_fraction:
                frac_hi.append(s.point)
                frac_lo.append(fpoint)

    if use_align:
        align_pts = dataset
        align_T = np.stack([c.tangent for c in charts])
        VN = np.stack([c.normal for c in charts])
        align_P = np.eye(n) - VN @ np.swapaxes(VN, 1, 2)
    else:
        align_pts = _empty(n)
        align_T = np.zeros((0, n, 0))
        align_P = np.zeros((0, n, n))

    return LossBatch(
        norm_points=np.concatenate(norm_pts) if norm_pts else _empty(n),
        norm_labels=np.concatenate([np.asarray(x, dtype=float) for x in norm_lbl])
        if norm_lbl
        else np.zeros(0),
        reflection_plus=np.stack(refl_p) if refl_p else _empty(n),
        reflection_minus=np.stack(refl_m) if refl_m else _empty(n),
        fraction_high=np.stack(frac_hi) if frac_hi else _empty(n),
        fraction_low=np.stack(frac_lo) if frac_lo else _empty(n),
        similar_a=_empty(n),
        similar_b=_empty(n),
        align_points=align_pts,
        align_tangent=align_T,
        align_normal_proj=align_P,
    )


def draw_similar_pairs(
    dataset: np.ndarray,
    charts,
    partners: np.ndarray,
    rng: np.random.Generator,
    i_max: int,
    epsilon: float,
    nn_tree: cKDTree | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fresh similar-pair endpoints: shared mixing weights and level per pair,
    both sides subject to the nearest-base rejection test."""
    dataset = np.asarray(dataset, dtype=float)
    if nn_tree is None:
        nn_tree = cKDTree(dataset)
    N = len(dataset)
    l = charts[0].normal.shape[1]
    w = rng.standard_normal((N, l))
    levels = rng.integers(1, i_max + 1, size=N)
    normals = np.stack([c.normal for c in charts])
    va = np.einsum("nkl,nl->nk", normals, w)
    vb = np.einsum("nkl,nl->nk", normals[partners], w)
    na = np.linalg.norm(va, axis=1)
    nb = np.linalg.norm(vb, axis=1)
    good = (na > 1e-12) & (nb > 1e-12)
    ua = np.where(good[:, None], va / np.maximum(na, 1e-12)[:, None], 0.0)
    ub = np.where(good[:, None], vb / np.maximum(nb, 1e-12)[:, None], 0.0)
    pa = dataset + levels[:, None] * epsilon * ua
    pb = dataset[partners] + levels[:, None] * epsilon * ub
    _, nn_a = nn_tree.query(pa)
    _, nn_b = nn_tree.query(pb)
    keep = good & (nn_a == np.arange(N)) & (nn_b == partners)
    return pa[keep], pb[keep]


def build_loss_batch(
    samples: list[AugmentedSample],
    dataset: np.ndarray,
    charts,
    partners: np.ndarray | None,
    rng: np.random.Generator | None,
    i_max: int,
    epsilon: float,
    nn_tree: cKDTree | None = None,
    include_base: bool = False,
    use_reflection: bool = True,
    use_fraction: bool = True,
    use_similar: bool = True,
    use_align: bool = True,
    static: LossBatch | None = None,
) -> LossBatch:
    """Assemble the per-epoch point sets.

    The static sets (norm, reflection, fraction, alignment) are built once
    and reusable via `static`; similar pairs are drawn fresh on every call.
    """
    from dataclasses import replace as _replace

    if static is None:
        static = build_static_sets(
            samples,
            dataset,
            charts,
            include_base=include_base,
            use_reflection=use_reflection,
            use_fraction=use_fraction,
            use_align=use_align,
        )
    n = np.asarray(dataset).shape[1]
    sim_a = sim_b = _empty(n)
    if use_similar and partners is not None and len(samples) > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        sim_a, sim_b = draw_similar_pairs(
            dataset, charts, partners, rng, i_max, epsilon, nn_tree
        )
    return _replace(static, similar_a=sim_a, similar_b=sim_b)


def _smooth_norm(Y: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(Y**2, axis=1) + _NORM_FLOOR**2)


def _unit_and_grad(Y: np.ndarray):
    s = _smooth_norm(Y)
    return Y / s[:, None], s


def compute_losses(
    model: MlpModel,
    batch: LossBatch,
    weights: dict | None = None,
    per_term_grads: bool = False,
):
    """Loss values and parameter gradients of the weighted total.

    Returns (LossValues, grads) or (LossValues, grads, per_term) where
    per_term maps term name to its own parameter-gradient list.
    """
    if batch.size() == 0:
        raise ValueError("empty loss batch")
    w = {"norm": 1.0, "reflection": 1.0, "fraction": 1.0, "similar": 1.0, "align": 1.0}
    if weights:
        w.update(weights)

    values = LossValues()
    grads = model.zero_grads()
    per_term = {name: model.zero_grads() for name in w} if per_term_grads else None

    def accumulate(name, acts, dY, scale):
        model.backprop_output(acts, scale * dY, grads)
        if per_term is not None:
            model.backprop_output(acts, dY, per_term[name])

    if len(batch.norm_points):
        Y, acts = model.forward_cached(batch.norm_points)
        s = _smooth_norm(Y)
        res = s - batch.norm_labels
        B = len(Y)
        values.norm = float(np.mean(res**2))
        dY = (2.0 / B) * (res / s)[:, None] * Y
        accumulate("norm", acts, dY, w["norm"])

    if len(batch.reflection_plus):
        Yp, acts_p = model.forward_cached(batch.reflection_plus)
        Ym, acts_m = model.forward_cached(batch.reflection_minus)
        ssum = Yp + Ym
        B = len(Yp)
        values.reflection = float(np.mean(np.sum(ssum**2, axis=1)))
        dY = (2.0 / B) * ssum
        accumulate("reflection", acts_p, dY, w["reflection"])
        accumulate("reflection", acts_m, dY, w["reflection"])

    if len(batch.fraction_high):
        Yh, acts_h = model.forward_cached(batch.fraction_high)
        Yl, acts_l = model.forward_cached(batch.fraction_low)
        uh, sh = _unit_and_grad(Yh)
        ul, sl = _unit_and_grad(Yl)
        diff = uh - ul
        B = len(Yh)
        values.fraction = float(np.mean(np.sum(diff**2, axis=1)))
        g = (2.0 / B) * diff
        dYh = g / sh[:, None] - Yh * (np.sum(Yh * g, axis=1) / sh**3)[:, None]
        dYl = -g / sl[:, None] + Yl * (np.sum(Yl * g, axis=1) / sl**3)[:, None]
        accumulate("fraction", acts_h, dYh, w["fraction"])
        accumulate("fraction", acts_l, dYl, w["fraction"])

    if len(batch.similar_a):
        Ya, acts_a = model.forward_cached(batch.similar_a)
        Yb, acts_b = model.forward_cached(batch.similar_b)
        diff = Ya - Yb
        B = len(Ya)
        values.similar = float(np.mean(np.sum(diff**2, axis=1)))
        dY = (2.0 / B) * diff
        accumulate("similar", acts_a, dY, w["similar"])
        accumulate("similar", acts_b, -dY, w["similar"])

    if len(batch.align_points):
        J, acts, chain = model.jacobian_cached(batch.align_points)
        JT = J @ batch.align_tangent  # (A, l, n-l)
        JP = J @ batch.align_normal_proj  # rows of J outside span(V_N)
        B = len(J)
        values.align = float(
            np.mean(np.sum(JT**2, axis=(1, 2)) + np.sum(JP**2, axis=(1, 2)))
        )
        TTt = batch.align_tangent @ np.swapaxes(batch.align_tangent, 1, 2)
        dJ = (2.0 / B) * (J @ TTt + JP)
        model.backprop_jacobian(acts, chain, w["align"] * dJ, grads)
        if per_term is not None:
            model.backprop_jacobian(acts, chain, dJ, per_term["align"])

    values.total = (
        w["norm"] * values.norm
        + w["reflection"] * values.reflection
        + w["fraction"] * values.fraction
        + w["similar"] * values.similar
        + w["align"] * values.align
    )
    if per_term is not None:
        return values, grads, per_term
    return values, grads


def subspace_residual(model: MlpModel, points: np.ndarray, charts, indices) -> float:
    """Monitored eigenvector-projection criterion (not optimized).

    Mutual projections between the trailing singular vectors of J and the
    chart normal basis; zero when tangent and normal spaces line up.
    """
    idx = np.asarray(indices)
    J = model.jacobian(points[idx])
    l = model.output_dim
    total = 0.0
    for row, i in enumerate(idx):
        _, _, vt = np.linalg.svd(J[row])
        E_null = vt[l:].T  # (n, n-l), null space of J
        VN = charts[i].normal
        total += np.sum((VN @ (VN.T @ E_null)) ** 2)
        total += np.sum((E_null @ (E_null.T @ VN)) ** 2)
    return float(total / max(len(idx), 1))
