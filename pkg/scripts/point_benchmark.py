"""Run the 3D-point benchmark (all planner variants, with and without
obstacles) over 10 seeds and print a results table."""

import time

import numpy as np

import seqmanifold as sm
from seqmanifold.benchmarks import intersection_boxes, point_task

PLANNERS = {
    "subtrees": sm.plan_sequence,
    "subtrees (greedy)": sm.plan_sequence_greedy,
    "single tree": sm.plan_single_tree,
}


def run(task, planner, seeds):
    costs, times, wins = [], [], 0
    for seed in seeds:
        t0 = time.perf_counter()
        result = planner(task, sm.PlannerParams(seed=seed))
        times.append(time.perf_counter() - t0)
        if result.success:
            wins += 1
            costs.append(result.cost)
    return wins, np.mean(costs) if costs else np.nan, np.std(costs) if costs else np.nan, np.mean(times)


def main():
    seeds = range(10)
    for label, obstacles in [("without obstacles", ()), ("with obstacles", intersection_boxes())]:
        task = point_task(obstacles=obstacles)
        print(f"\n3D point {label}")
        print(f"{'method':>20} {'success':>8} {'cost':>16} {'time [s]':>9}")
        for name, planner in PLANNERS.items():
            wins, mean, std, t = run(task, planner, seeds)
            print(f"{name:>20} {wins:>5}/10 {mean:>9.2f} +- {std:4.2f} {t:>9.1f}")


if __name__ == "__main__":
    main()
