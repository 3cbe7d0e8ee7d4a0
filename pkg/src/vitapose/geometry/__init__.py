"""Rigid-body geometry: rotations, poses, clouds, voxel grids, meshes."""

from .mesh import TriangleMesh, load_mesh, load_obj, load_ply, sample_mesh_surface
from .pointcloud import PointCloud, nearest_neighbor, transform_points
from .pose import DeltaPose, Pose
from .rotation import exp_map, right_jacobian, skew
from .voxel import DEFAULT_VOXEL_SIZE, VoxelGrid, voxelize

__all__ = [
    "DEFAULT_VOXEL_SIZE", "DeltaPose", "Pose", "PointCloud", "TriangleMesh",
    "VoxelGrid", "exp_map", "load_mesh", "load_obj", "load_ply",
    "nearest_neighbor", "right_jacobian", "sample_mesh_surface", "skew",
    "transform_points", "voxelize",
]
