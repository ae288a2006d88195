"""Acceptance suite: every criterion printed as its own pass/fail line.

Heavy artifacts (benchmark planner runs, trained models) are cached at
module scope and shared across criteria.
"""

import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial import cKDTree

import seqmanifold as sm
from seqmanifold.datasets import DatasetSpec, generate
from seqmanifold.evaluation import ABLATION_VARIANTS, evaluate_model
from seqmanifold.learning.augment import augment, nearest_neighbor_pairs
from seqmanifold.learning.charts import build_charts
from seqmanifold.learning.learned import learned_manifold
from seqmanifold.learning.losses import build_loss_batch, compute_losses
from seqmanifold.learning.mlp import MlpModel
from seqmanifold.learning.osa import osa_align
from seqmanifold.learning.training import TrainingConfig, train
from seqmanifold.manifolds import ProjectionSettings, project_batch

from conftest import intersection_boxes, make_point_task
from test_tree import dijkstra_costs

REPORTED_COST_FREE = 14.47
REPORTED_COST_OBSTACLES = 15.95


def report(criterion: str, passed: bool, detail: str):
    line = f"[{criterion}] {'PASS' if passed else 'FAIL'}: {detail}"
    print(line, flush=True)
    assert passed, line


# -- shared planner runs -------------------------------------------------------

_plan_cache: dict = {}


def plan_run(seed, variant="standard", rho=0.1, m=1200, obstacles=False):
    key = (variant, rho, m, obstacles, seed)
    if key not in _plan_cache:
        task = make_point_task(obstacles=intersection_boxes() if obstacles else ())
        params = sm.PlannerParams(rho=rho, m=m, seed=seed)
        planner = {
            "standard": sm.plan_sequence,
            "greedy": sm.plan_sequence_greedy,
            "single_tree": sm.plan_single_tree,
        }[variant]
        _plan_cache[key] = planner(task, params)
    return _plan_cache[key]


def mean_cost(results):
    costs = [r.cost for r in results if r.success]
    return float(np.mean(costs)) if costs else float("inf")


# -- shared trained models -----------------------------------------------------

_train_cache: dict = {}


def sphere_training(seed, variant="none", i_max=7, noise=0.0, n=2000):
    key = (seed, variant, i_max, noise, n)
    if key not in _train_cache:
        spec = DatasetSpec("sphere", n, noise=noise, seed=seed)
        data = generate(spec)
        cfg = replace(
            TrainingConfig(seed=seed, i_max=i_max, monitor_subspace=0),
            **ABLATION_VARIANTS[variant],
        )
        result = train(data, cfg)
        metrics = evaluate_model(result.model, "sphere", train_points=data, seed=seed)
        _train_cache[key] = (result, metrics)
    return _train_cache[key]


SEEDS3 = (0, 1, 2)


def P_values(variant="none", i_max=7, noise=0.0):
    return [sphere_training(s, variant, i_max, noise)[1].P for s in SEEDS3]


# -- criteria ------------------------------------------------------------------


def test_criterion_1_projection_correctness(rng):
    manifolds = {
        "sphere": sm.sphere(),
        "paraboloid_up": sm.paraboloid((0.1, 0.1), 2.0),
        "paraboloid_down": sm.paraboloid((-0.1, -0.1), -2.0),
        "cylinder": sm.cylinder(radius=2.0, coeff=0.25),
        "plane": sm.axis_plane(2, 0.0),
    }
    settings = ProjectionSettings(tolerance=1e-5, max_iterations=100)
    t0 = time.perf_counter()
    rates = {}
    for name, manifold in manifolds.items():
        starts = rng.uniform(-6, 6, size=(1000, 3))
        projected, ok = project_batch(starts, manifold, settings)
        residual = np.linalg.norm(manifold.fn(projected[ok]), axis=-1)
        assert np.all(residual <= 1e-5)
        rates[name] = 100.0 * np.mean(ok)
    elapsed = time.perf_counter() - t0
    passed = all(rate >= 99.0 for rate in rates.values()) and elapsed < 1.0
    report(
        "criterion 1",
        passed,
        f"convergence {min(rates.values()):.1f}..{max(rates.values()):.1f}% "
        f"in {elapsed * 1000:.0f} ms",
    )


def test_criterion_2_benchmark_without_obstacles():
    runs = [plan_run(seed) for seed in range(10)]
    greedy = [plan_run(seed, variant="greedy") for seed in range(10)]
    successes = sum(r.success for r in runs)
    mean = mean_cost(runs)
    greedy_mean = mean_cost(greedy)
    slowest = max(r.elapsed for r in runs)
    passed = (
        successes == 10
        and abs(mean - REPORTED_COST_FREE) <= 0.10 * REPORTED_COST_FREE
        and mean <= greedy_mean
        and slowest <= 60.0
    )
    report(
        "criterion 2",
        passed,
        f"success {successes}/10, mean {mean:.3f} (target {REPORTED_COST_FREE} +-10%), "
        f"greedy {greedy_mean:.3f}, slowest seed {slowest:.1f} s",
    )


def test_criterion_3_benchmark_with_obstacles():
    runs = [plan_run(seed, obstacles=True) for seed in range(10)]
    successes = sum(r.success for r in runs)
    mean = mean_cost(runs)
    passed = successes >= 9 and abs(mean - REPORTED_COST_OBSTACLES) <= 0.15 * REPORTED_COST_OBSTACLES
    report(
        "criterion 3",
        passed,
        f"success {successes}/10, mean {mean:.3f} (target {REPORTED_COST_OBSTACLES} +-15%)",
    )


def _paired_costs(setting_key, values):
    """Per-seed cost arrays for a sweep (NaN marks a failed run); seeds are
    shared so comparisons use common random numbers."""
    out = []
    for value in values:
        runs = [plan_run(seed, **{setting_key: value}) for seed in range(10)]
        out.append(np.array([r.cost if r.success else np.nan for r in runs]))
    return out


def _trend_holds(costs, direction):
    """Adjacent means must follow the trend up to twice the paired-difference
    standard error (settings with equal true means cannot be ordered strictly
    by any correct implementation at a fixed seed count), and the endpoints
    must differ strictly.  Failed runs drop out of the pairing."""
    ok = True
    for a, b in zip(costs, costs[1:]):
        diff = (b - a) * direction  # positive when the trend is followed
        diff = diff[~np.isnan(diff)]
        slack = 2.0 * np.std(diff, ddof=1) / np.sqrt(len(diff))
        ok &= float(np.mean(diff)) >= -slack
    end = (costs[-1] - costs[0]) * direction
    ok &= float(np.nanmean(end)) > 0.0
    return ok


def test_criterion_4_rho_and_m_sweeps():
    rho_costs = _paired_costs("rho", (0.01, 0.1, 1.0, 5.0))
    m_costs = _paired_costs("m", (100, 400, 1200))
    rho_ok = _trend_holds(rho_costs, direction=+1.0)  # cost grows with rho
    m_ok = _trend_holds(m_costs, direction=-1.0)  # cost shrinks with m
    report(
        "criterion 4",
        rho_ok and m_ok,
        f"cost vs rho {[round(float(np.nanmean(c)), 3) for c in rho_costs]} non-decreasing={rho_ok}; "
        f"cost vs m {[round(float(np.nanmean(c)), 3) for c in m_costs]} non-increasing={m_ok}",
    )


def test_criterion_5_rewiring_oracle():
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        obstacles = [sm.Box(low=np.array([-1.0, -4.0]), high=np.array([0.0, 2.0]))]
        free = sm.FreeSpace(
            bounds=sm.Box(low=-8.0 * np.ones(2), high=8.0 * np.ones(2)),
            obstacles=tuple(obstacles),
            resolution=0.05,
        )
        tree = sm.PlanTree(2, root_config=np.array([-5.0, 0.0]))
        alpha = 1.5
        inserted = 0
        while inserted < 30:
            q_rand = rng.uniform(-8, 8, size=2)
            near = tree.nearest(q_rand)
            step = q_rand - tree.config(near)
            dist = np.linalg.norm(step)
            if dist < 1e-9:
                continue
            q_new = tree.config(near) + min(alpha, dist) * step / dist
            n = tree.real_node_count
            radius = min(40.0 * (np.log(n) / n) ** 0.5, alpha) if n > 1 else 0.0
            if tree.extend(near, q_new, free, radius):
                inserted += 1
        worst = max(worst, np.max(np.abs(tree.costs[: tree.size] - dijkstra_costs(tree))))
    report("criterion 5", worst <= 1e-9, f"max |cost - dijkstra| = {worst:.2e} over 50 instances")


def test_criterion_6_success_rate_monotone_in_m():
    rates = []
    for m in (100, 400, 1200):
        ok = sum(plan_run(seed, m=m).success for seed in range(20))
        rates.append(ok / 20.0)
    passed = rates[0] <= rates[1] + 1e-12 and rates[1] <= rates[2] + 1e-12
    report("criterion 6", passed, f"success rates over m (100, 400, 1200): {rates}")


def test_criterion_7_gradient_master_check():
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(2000 + trial)
        n_pts = 25 + 5 * (trial % 3)
        data = generate(DatasetSpec("sphere" if trial % 2 else "circle3d", n_pts, seed=trial))
        charts, l = build_charts(data, K=6)
        charts, _ = osa_align(data, charts, H=6, steps=30)
        samples = augment(data, charts, 2, 0.15, rng=rng)
        partners = nearest_neighbor_pairs(data)
        batch = build_loss_batch(
            samples, data, charts, partners, rng, 2, 0.15, nn_tree=cKDTree(data)
        )
        widths = [3, 5 + (trial % 3), 4, l]
        model = MlpModel.init(widths, rng)
        _, _, per_term = compute_losses(model, batch, per_term_grads=True)
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
            scale = np.maximum(np.abs(fd), 1e-6)
            worst = max(worst, float(np.max(np.abs(analytic - fd) / scale)))
            assert np.allclose(analytic, fd, rtol=1e-4, atol=1e-7), (trial, name)
    elapsed = time.perf_counter() - t0
    passed = elapsed < 30.0
    report(
        "criterion 7",
        passed,
        f"5 loss gradients FD-checked on 20 models, worst rel err {worst:.2e}, {elapsed:.1f} s",
    )


def test_criterion_8_sphere_learning():
    Ps = P_values()
    metrics = [sphere_training(s)[1] for s in SEEDS3]
    mus = [m.mu_test[0] for m in metrics]
    passed = np.mean(Ps) >= 90.0 and np.mean(mus) <= 0.05
    # train and projected-test distances track each other on converged models
    for m in metrics:
        assert abs(m.mu_test[0] - m.mu_train[0]) <= 2.0 * max(m.mu_test[1], m.mu_train[1])
    report(
        "criterion 8",
        passed,
        f"P = {np.round(Ps, 2).tolist()} (mean {np.mean(Ps):.2f} >= 90), "
        f"mu_test mean {np.mean(mus):.4f} <= 0.05",
    )


def test_criterion_9_ablation_directions():
    none_mean = float(np.mean(P_values()))
    no_aug = float(np.mean(P_values("no_augmentation")))
    no_osa = float(np.mean(P_values("no_osa")))
    no_pair = float(np.mean(P_values("no_pair_losses")))
    passed = no_aug <= 30.0 and no_osa < none_mean and no_pair <= 60.0
    report(
        "criterion 9",
        passed,
        f"P: none {none_mean:.2f}, w/o augmentation {no_aug:.2f} (<=30), "
        f"w/o OSA {no_osa:.2f} (<none), w/o pair losses {no_pair:.2f} (<=60)",
    )


def test_criterion_10_augmentation_level_sweep():
    low = float(np.mean(P_values(i_max=1)))
    high = float(np.mean(P_values(i_max=7)))
    report(
        "criterion 10",
        low < high,
        f"P(i_max=1) = {low:.2f} < P(i_max=7) = {high:.2f}",
    )


def test_criterion_11_noisy_sphere():
    eps_augs = [sphere_training(s, noise=0.01)[0].epsilon_aug for s in SEEDS3]
    assert all(e >= 5 * 0.01 for e in eps_augs), "offset magnitude must dominate the noise"
    Ps = P_values(noise=0.01)
    passed = float(np.mean(Ps)) >= 60.0
    report(
        "criterion 11",
        passed,
        f"noisy-data P = {np.round(Ps, 2).tolist()} (mean {np.mean(Ps):.2f} >= 60)",
    )


def learned_task_pair():
    """Hourglass with a unit-sphere waist: analytic vs learned middle."""
    upper = sm.paraboloid((0.5, 0.5), 0.25)
    lower = sm.paraboloid((-0.5, -0.5), -0.25)
    goal = sm.point_goal(np.array([-1.2, -1.2, -1.69]))
    start = np.array([1.2, 1.2, 1.69])
    bounds = sm.Box(low=-2.5 * np.ones(3), high=2.5 * np.ones(3))
    result, _ = sphere_training(0)
    learned = learned_manifold(result.model)

    def make(middle):
        return sm.SequencedTask(
            manifolds=(upper, middle, lower, goal),
            start=start,
            free=sm.FreeSpace(bounds=bounds),
        )

    return make(sm.sphere()), make(learned)


def test_criterion_12_planning_on_learned_manifold():
    analytic_task, learned_task = learned_task_pair()
    params = sm.PlannerParams(alpha=0.5, r=0.75, rho=0.05, m=1200, seed=0)
    analytic = sm.plan_sequence(analytic_task, params)
    learned = sm.plan_sequence(learned_task, params)
    ok = analytic.success and learned.success
    deviation = 0.0
    if ok:
        first, last = learned.segments[1]
        middle = np.asarray(learned.waypoints[first : last + 1])
        deviation = float(np.max(np.abs(np.linalg.norm(middle, axis=1) - 1.0)))
    cost_gap = abs(learned.cost - analytic.cost) / analytic.cost if ok else float("inf")
    passed = ok and deviation <= 0.1 and cost_gap <= 0.25
    report(
        "criterion 12",
        passed,
        f"success={ok}, middle-segment max distance to true sphere {deviation:.4f} (<=0.1), "
        f"cost learned {learned.cost:.3f} vs analytic {analytic.cost:.3f} ({100 * cost_gap:.1f}% <= 25%)",
    )


def test_criterion_13_alignment_properties():
    # synthetic flipped bases on sphere samples: exact radial normals
    data = generate(DatasetSpec("sphere", 800, seed=13))
    charts, _ = build_charts(data, K=10)
    radial = data / np.linalg.norm(data, axis=1, keepdims=True)
    flip_rng = np.random.default_rng(31)
    for i, c in enumerate(charts):
        sign = -1.0 if flip_rng.uniform() < 0.5 else 1.0
        c.normal = sign * radial[i][:, None]
    aligned, graph = osa_align(data, charts, H=10)
    losses = np.array(list(graph.chosen_losses.values()))
    aligned_ok = bool(np.all(losses <= 1e-3))

    again, graph2 = osa_align(data, aligned, H=10)
    idempotent = not graph2.flipped.any() and all(
        v <= 1e-3 for v in graph2.chosen_losses.values()
    )

    circle = generate(DatasetSpec("circle3d", 300, seed=13))
    ccharts, l2 = build_charts(circle, K=8)
    _, cgraph = osa_align(circle, ccharts, H=8)
    so_ok = True
    for R in list(cgraph.compound) + [r for g in (graph, graph2) for r in g.compound]:
        li = R.shape[0]
        so_ok &= bool(np.allclose(R.T @ R, np.eye(li), atol=1e-6))
        so_ok &= bool(abs(np.linalg.det(R) - 1.0) <= 1e-6)
    passed = aligned_ok and idempotent and so_ok
    report(
        "criterion 13",
        passed,
        f"max edge loss {losses.max():.2e} (<=1e-3), idempotent={idempotent}, "
        f"all rotations in SO(l)={so_ok}",
    )
