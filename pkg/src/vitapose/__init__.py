"""Visuotactile pose validation and refinement.

Checks a visual 6D object-pose estimate against tactile and proprioceptive
evidence from a gripper, and pulls implausible estimates back toward
consistency with a spring-energy correction optimized at inference time.
No training involved; everything runs from geometry available in the scene.
"""

from .errors import (
    GenerationError,
    InvalidArgumentError,
    MeshFormatError,
    NumericFailure,
    SceneFormatError,
)
from .feasibility import (
    ContactResult,
    FeasibilityReport,
    KinematicResult,
    PenetrationResult,
    Thresholds,
    check_all,
    check_contact,
    check_kinematic,
    check_penetration,
)
from .geometry import (
    DeltaPose,
    PointCloud,
    Pose,
    TriangleMesh,
    VoxelGrid,
    exp_map,
    load_mesh,
    nearest_neighbor,
    right_jacobian,
    sample_mesh_surface,
    skew,
    transform_points,
    voxelize,
)
from .icp import IcpConfig, IcpResult, icp_refine
from .metrics import (
    CSV_COLUMNS,
    MetricSample,
    add_error,
    adds_error,
    auc,
    position_error,
)
from .refiner import (
    RefinementConfig,
    RefinementResult,
    RefinementTrace,
    attractive_energy,
    energy_gradient,
    init_from_scene,
    refine,
    repulsive_energy,
    total_energy,
)
from .scene import (
    FrameSpec,
    GripperSpec,
    Joint,
    KinematicChain,
    Link,
    ObjectSpec,
    PreviousFrame,
    Scene,
    SceneDocument,
    TactileReading,
    TaxelMount,
    build_scene,
    contact_patch,
    extract_contacts,
    forward_kinematics,
    load_scene,
    robot_point_cloud,
    save_scene_document,
    taxel_poses,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_COLUMNS",
    "ContactResult",
    "DeltaPose",
    "FeasibilityReport",
    "FrameSpec",
    "GenerationError",
    "GripperSpec",
    "IcpConfig",
    "IcpResult",
    "InvalidArgumentError",
    "Joint",
    "KinematicChain",
    "KinematicResult",
    "Link",
    "MeshFormatError",
    "MetricSample",
    "NumericFailure",
    "ObjectSpec",
    "PenetrationResult",
    "PointCloud",
    "Pose",
    "PreviousFrame",
    "RefinementConfig",
    "RefinementResult",
    "RefinementTrace",
    "Scene",
    "SceneDocument",
    "SceneFormatError",
    "TactileReading",
    "TaxelMount",
    "Thresholds",
    "TriangleMesh",
    "VoxelGrid",
    "add_error",
    "adds_error",
    "attractive_energy",
    "auc",
    "build_scene",
    "check_all",
    "check_contact",
    "check_kinematic",
    "check_penetration",
    "contact_patch",
    "energy_gradient",
    "exp_map",
    "extract_contacts",
    "forward_kinematics",
    "icp_refine",
    "init_from_scene",
    "load_mesh",
    "load_scene",
    "nearest_neighbor",
    "position_error",
    "refine",
    "repulsive_energy",
    "right_jacobian",
    "robot_point_cloud",
    "sample_mesh_surface",
    "save_scene_document",
    "skew",
    "taxel_poses",
    "total_energy",
    "transform_points",
    "voxelize",
    "__version__",
]
