"""Planning across sequences of constraint manifolds, with learned constraints.

Two halves share one manifold interface: a sampling-based optimal planner
that traverses a fixed chain of equality constraints, and a pipeline that
learns such constraints from on-manifold data so learned and analytic
manifolds are interchangeable inside the planner.
"""

from .collision import Box, FreeSpace, add_obstacle_hook, collision_free, identity_hook
from .kinematics import (
    SerialChain,
    fk_align_z,
    fk_position,
    grasp_constraint,
    handover_constraint,
    upright_constraint,
)
from .manifolds import (
    Manifold,
    ProjectionSettings,
    axis_plane,
    cylinder,
    evaluate,
    intersect,
    jacobian,
    paraboloid,
    point_goal,
    project,
    project_batch,
    sphere,
    tangent_basis,
)
from .planner import (
    PathResult,
    PlannerParams,
    SequencedTask,
    apply_upsilon,
    plan_sequence,
    plan_sequence_greedy,
    plan_single_tree,
    sample_uniform,
    steer_constraint,
    steer_point,
)
from .tree import PlanTree

__all__ = [
    "Box",
    "FreeSpace",
    "add_obstacle_hook",
    "collision_free",
    "identity_hook",
    "SerialChain",
    "fk_align_z",
    "fk_position",
    "grasp_constraint",
    "handover_constraint",
    "upright_constraint",
    "Manifold",
    "ProjectionSettings",
    "axis_plane",
    "cylinder",
    "evaluate",
    "intersect",
    "jacobian",
    "paraboloid",
    "point_goal",
    "project",
    "project_batch",
    "sphere",
    "tangent_basis",
    "PathResult",
    "PlannerParams",
    "SequencedTask",
    "apply_upsilon",
    "plan_sequence",
    "plan_sequence_greedy",
    "plan_single_tree",
    "sample_uniform",
    "steer_constraint",
    "steer_point",
    "PlanTree",
]

__version__ = "0.1.0"
