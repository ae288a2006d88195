import numpy as np
import pytest

from seqmanifold.benchmarks import intersection_boxes
from seqmanifold.benchmarks import plane_goal_task as make_plane_goal_task
from seqmanifold.benchmarks import point_task as make_point_task

__all__ = ["intersection_boxes", "make_plane_goal_task", "make_point_task"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def point_task():
    return make_point_task()


@pytest.fixture
def plane_goal_task():
    return make_plane_goal_task()
