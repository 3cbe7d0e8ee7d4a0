"""Synthetic grasp scenes with known ground truth for validation."""

from .generate import (
    SCENARIOS,
    GraspSpec,
    NoiseModel,
    TrajectoryDocument,
    build_trajectory_scenes,
    claw_chain,
    finger_directions,
    generate_scene,
    load_trajectory,
    perturb_pose,
    random_rotation,
    save_trajectory,
    simulate_trajectory,
    trajectory_from_dict,
    trajectory_to_dict,
)
from .oracles import oracle_feasibility, oracle_refine, refinement_candidates
from .shapes import (
    SHAPE_KINDS,
    box_mesh,
    cylinder_mesh,
    make_shape,
    random_shape,
    sphere_mesh,
    support_distance,
)

__all__ = [
    "SCENARIOS",
    "SHAPE_KINDS",
    "GraspSpec",
    "NoiseModel",
    "TrajectoryDocument",
    "box_mesh",
    "build_trajectory_scenes",
    "claw_chain",
    "cylinder_mesh",
    "finger_directions",
    "generate_scene",
    "load_trajectory",
    "make_shape",
    "oracle_feasibility",
    "oracle_refine",
    "perturb_pose",
    "random_rotation",
    "random_shape",
    "refinement_candidates",
    "save_trajectory",
    "simulate_trajectory",
    "sphere_mesh",
    "support_distance",
    "trajectory_from_dict",
    "trajectory_to_dict",
]
