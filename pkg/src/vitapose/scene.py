"""Gripper chain, tactile reading, and assembled per-frame scenes.

A scene lives in the camera frame: the object pose maps the object's model
frame into it, and the gripper's base pose plus joint values place the links
(and the taxels mounted on them) through forward kinematics.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, SceneFormatError
from .geometry import (PointCloud, Pose, TriangleMesh, VoxelGrid, exp_map, load_mesh,
                       sample_mesh_surface, transform_points, voxelize)

DEFAULT_SAMPLE_COUNT = 2048
DEFAULT_SAMPLES_PER_LINK = 128
DEFAULT_TAXEL_THRESHOLD = 0.5

JOINT_TYPES = ("fixed", "revolute", "prismatic")


@dataclass(frozen=True)
class Joint:
    type: str
    axis: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.type not in JOINT_TYPES:
            raise InvalidArgumentError(f"joint type must be one of {JOINT_TYPES}, got {self.type!r}")
        axis = np.array(self.axis, dtype=np.float64)
        if axis.shape != (3,):
            raise InvalidArgumentError("joint axis must have shape (3,)")
        if self.type != "fixed":
            norm = np.linalg.norm(axis)
            if not np.isclose(norm, 1.0, atol=1e-6):
                raise InvalidArgumentError("moving joint axis must be unit length")
        axis.flags.writeable = False
        object.__setattr__(self, "axis", axis)

    @property
    def movable(self) -> bool:
        return self.type != "fixed"


@dataclass(frozen=True)
class Link:
    name: str
    parent: int  # index of the parent link, -1 for the root
    transform: Pose  # fixed offset from the parent frame
    joint: Joint
    mesh: Optional[TriangleMesh] = None


@dataclass(frozen=True)
class TaxelMount:
    link: int
    transform: Pose  # taxel frame relative to its link


@dataclass(frozen=True)
class KinematicChain:
    """Tree of links in topological order (each parent precedes its children)."""

    links: tuple
    taxels: tuple

    def __post_init__(self):
        links = tuple(self.links)
        taxels = tuple(self.taxels)
        if not links:
            raise InvalidArgumentError("chain needs at least one link")
        roots = sum(1 for link in links if link.parent < 0)
        if roots != 1:
            raise InvalidArgumentError(f"chain must have exactly one root, found {roots}")
        for i, link in enumerate(links):
            if link.parent >= i:
                raise InvalidArgumentError(
                    f"link {link.name!r}: parent index {link.parent} must precede index {i}")
        for mount in taxels:
            if not 0 <= mount.link < len(links):
                raise InvalidArgumentError(f"taxel mounted on unknown link {mount.link}")
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "taxels", taxels)

    @property
    def movable_joint_count(self) -> int:
        return sum(1 for link in self.links if link.joint.movable)


def _joint_motion(joint: Joint, value: float) -> Pose:
    if joint.type == "revolute":
        return Pose(exp_map(joint.axis * value), np.zeros(3))
    if joint.type == "prismatic":
        return Pose(np.eye(3), joint.axis * value)
    return Pose.identity()


def forward_kinematics(chain: KinematicChain, joints: np.ndarray, base_pose: Pose) -> tuple:
    """Camera-frame pose of every link.

    `joints` supplies one value per movable joint, in link order. Each link's
    pose is parent_pose * fixed_transform * joint_motion.
    """
    values = np.asarray(joints, dtype=np.float64)
    if values.shape != (chain.movable_joint_count,):
        raise InvalidArgumentError(
            f"expected {chain.movable_joint_count} joint values, got shape {values.shape}")
    poses = []
    cursor = 0
    for link in chain.links:
        parent = base_pose if link.parent < 0 else poses[link.parent]
        local = link.transform
        if link.joint.movable:
            local = local.compose(_joint_motion(link.joint, float(values[cursor])))
            cursor += 1
        poses.append(parent.compose(local))
    return tuple(poses)


def taxel_poses(chain: KinematicChain, link_poses: tuple) -> tuple:
    """Camera-frame pose of every taxel (its origin is the sensing point)."""
    return tuple(link_poses[mount.link].compose(mount.transform) for mount in chain.taxels)


@dataclass(frozen=True)
class TactileReading:
    """Per-taxel scalar values with a shared activation threshold."""

    values: np.ndarray
    threshold: float = DEFAULT_TAXEL_THRESHOLD

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidArgumentError("taxel values must be a flat array")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def activated(self) -> np.ndarray:
        return self.values > self.threshold


def extract_contacts(reading: TactileReading, poses: tuple) -> PointCloud:
    """Origins of the activated taxels; empty when nothing is touching."""
    if len(poses) != len(reading.values):
        raise InvalidArgumentError(
            f"{len(reading.values)} taxel values for {len(poses)} taxel poses")
    origins = [pose.translation for pose, on in zip(poses, reading.activated) if on]
    if not origins:
        return PointCloud.empty()
    return PointCloud(np.stack(origins))


def robot_point_cloud(chain: KinematicChain, link_poses: tuple,
                      samples_per_link: int = DEFAULT_SAMPLES_PER_LINK,
                      seed: int = 0) -> PointCloud:
    """Camera-frame surface samples of every meshed link.

    Link i samples with seed `seed + i`, so per-link clouds are reproducible
    in isolation.
    """
    if len(link_poses) != len(chain.links):
        raise InvalidArgumentError("link_poses must match the chain's links")
    parts = []
    for i, link in enumerate(chain.links):
        if link.mesh is None:
            continue
        local = sample_mesh_surface(link.mesh, samples_per_link, seed + i)
        parts.append(transform_points(link_poses[i], local))
    if not parts:
        raise InvalidArgumentError("chain has no meshed links to sample")
    return PointCloud(np.concatenate([p.points for p in parts]),
                      np.concatenate([p.normals for p in parts]))


def contact_patch(object_cloud: PointCloud, pose: Pose, tactile_cloud: PointCloud,
                  contact_threshold: float) -> np.ndarray:
    """Indices of object points within contact range of any tactile point."""
    if len(tactile_cloud) == 0 or len(object_cloud) == 0:
        return np.zeros(0, dtype=np.int64)
    posed = pose.apply(object_cloud.points)
    _, sq = kernels.nearest_neighbors(posed, tactile_cloud.points)
    return np.flatnonzero(np.sqrt(sq) <= contact_threshold).astype(np.int64)


@dataclass(frozen=True)
class PreviousFrame:
    """What the pipeline knew one frame ago."""

    pose: Pose
    patch_indices: np.ndarray
    taxel_poses: Optional[tuple] = None
    taxel_active: Optional[np.ndarray] = None

    def __post_init__(self):
        idx = np.array(self.patch_indices, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "patch_indices", idx)
        if self.taxel_active is not None:
            active = np.array(self.taxel_active, dtype=bool)
            active.flags.writeable = False
            object.__setattr__(self, "taxel_active", active)
        if self.taxel_poses is not None:
            object.__setattr__(self, "taxel_poses", tuple(self.taxel_poses))


@dataclass(frozen=True)
class Scene:
    """One frame's worth of geometry, proprioception, and touch."""

    object_mesh: TriangleMesh
    object_cloud: PointCloud  # model frame, with normals
    object_voxels: VoxelGrid  # model frame
    chain: KinematicChain
    joints: np.ndarray
    base_pose: Pose
    link_poses: tuple
    taxel_poses: tuple
    reading: TactileReading
    tactile_cloud: PointCloud  # camera frame, activated taxel origins
    robot_cloud: PointCloud  # camera frame
    visual_pose: Pose
    ground_truth_pose: Optional[Pose] = None
    previous: Optional[PreviousFrame] = None
    scene_id: str = ""

    def __post_init__(self):
        joints = np.array(self.joints, dtype=np.float64)
        joints.flags.writeable = False
        object.__setattr__(self, "joints", joints)


# --- document layer: the JSON schema and scene assembly -----------------


@dataclass(frozen=True)
class ObjectSpec:
    mesh: TriangleMesh
    sample_count: int = DEFAULT_SAMPLE_COUNT
    voxel_size: float = 0.005
    seed: int = 0
    mesh_path: Optional[str] = None  # kept for round-tripping path-based documents


@dataclass(frozen=True)
class GripperSpec:
    chain: KinematicChain
    samples_per_link: int = DEFAULT_SAMPLES_PER_LINK
    seed: int = 0


@dataclass(frozen=True)
class FrameSpec:
    joints: np.ndarray
    base_pose: Pose
    taxel_values: np.ndarray
    threshold: float
    visual_pose: Pose
    ground_truth_pose: Optional[Pose] = None
    previous: Optional[PreviousFrame] = None


@dataclass(frozen=True)
class SceneDocument:
    object: ObjectSpec
    gripper: GripperSpec
    frame: FrameSpec
    scene_id: str = ""


def build_scene(doc: SceneDocument,
                object_cloud: Optional[PointCloud] = None,
                object_voxels: Optional[VoxelGrid] = None) -> Scene:
    """Assemble a Scene, sampling clouds unless precomputed ones are passed."""
    spec = doc.object
    if object_cloud is None:
        object_cloud = sample_mesh_surface(spec.mesh, spec.sample_count, spec.seed)
    if object_voxels is None:
        object_voxels = voxelize(object_cloud.points, spec.voxel_size)
    frame = doc.frame
    reading = TactileReading(frame.taxel_values, frame.threshold)
    links = forward_kinematics(doc.gripper.chain, frame.joints, frame.base_pose)
    taxels = taxel_poses(doc.gripper.chain, links)
    return Scene(
        object_mesh=spec.mesh,
        object_cloud=object_cloud,
        object_voxels=object_voxels,
        chain=doc.gripper.chain,
        joints=frame.joints,
        base_pose=frame.base_pose,
        link_poses=links,
        taxel_poses=taxels,
        reading=reading,
        tactile_cloud=extract_contacts(reading, taxels),
        robot_cloud=robot_point_cloud(doc.gripper.chain, links,
                                      doc.gripper.samples_per_link, doc.gripper.seed),
        visual_pose=frame.visual_pose,
        ground_truth_pose=frame.ground_truth_pose,
        previous=frame.previous,
        scene_id=doc.scene_id,
    )


def _require(data: dict, key: str, where: str):
    if not isinstance(data, dict) or key not in data:
        raise SceneFormatError(f"missing field {where}.{key}")
    return data[key]


def _pose_from(data, where: str) -> Pose:
    rotation = _require(data, "rotation", where)
    translation = _require(data, "translation", where)
    try:
        return Pose(np.array(rotation, dtype=np.float64).reshape(3, 3), translation)
    except (InvalidArgumentError, ValueError) as exc:
        raise SceneFormatError(f"bad pose at {where}: {exc}") from exc


def _mesh_from(data: dict, where: str, base_dir: Optional[Path]) -> tuple:
    if "mesh" in data:
        try:
            return TriangleMesh.from_dict(data["mesh"]), None
        except (KeyError, ValueError, InvalidArgumentError) as exc:
            raise SceneFormatError(f"bad inline mesh at {where}: {exc}") from exc
    if "mesh_path" in data:
        path = Path(data["mesh_path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_mesh(path), str(data["mesh_path"])
    raise SceneFormatError(f"{where} needs 'mesh' or 'mesh_path'")


def object_spec_from_dict(data: dict, base_dir: Optional[Path] = None) -> ObjectSpec:
    mesh, mesh_path = _mesh_from(data, "object", base_dir)
    return ObjectSpec(mesh=mesh,
                      sample_count=int(data.get("sample_count", DEFAULT_SAMPLE_COUNT)),
                      voxel_size=float(data.get("voxel_size", 0.005)),
                      seed=int(data.get("seed", 0)),
                      mesh_path=mesh_path)


def object_spec_to_dict(spec: ObjectSpec) -> dict:
    out = {"sample_count": spec.sample_count, "voxel_size": spec.voxel_size,
           "seed": spec.seed}
    if spec.mesh_path is not None:
        out["mesh_path"] = spec.mesh_path
    else:
        out["mesh"] = spec.mesh.to_dict()
    return out


def _link_from_dict(data: dict, index: int, base_dir: Optional[Path]) -> Link:
    where = f"gripper.chain[{index}]"
    joint_data = _require(data, "joint", where)
    joint = Joint(str(_require(joint_data, "type", where + ".joint")),
                  np.array(joint_data.get("axis", [0.0, 0.0, 0.0]), dtype=np.float64))
    mesh = None
    if "mesh" in data or "mesh_path" in data:
        mesh, _ = _mesh_from(data, where, base_dir)
    return Link(name=str(data.get("name", f"link{index}")),
                parent=int(_require(data, "parent", where)),
                transform=_pose_from(_require(data, "transform", where), where + ".transform"),
                joint=joint,
                mesh=mesh)


def _link_to_dict(link: Link) -> dict:
    out = {"name": link.name, "parent": link.parent,
           "transform": link.transform.to_dict(),
           "joint": {"type": link.joint.type, "axis": [float(x) for x in link.joint.axis]}}
    if link.mesh is not None:
        out["mesh"] = link.mesh.to_dict()
    return out


def gripper_spec_from_dict(data: dict, base_dir: Optional[Path] = None) -> GripperSpec:
    chain_data = _require(data, "chain", "gripper")
    links = [_link_from_dict(item, i, base_dir) for i, item in enumerate(chain_data)]
    mounts = [TaxelMount(link=int(_require(item, "link", f"gripper.taxels[{i}]")),
                         transform=_pose_from(_require(item, "transform", f"gripper.taxels[{i}]"),
                                              f"gripper.taxels[{i}].transform"))
              for i, item in enumerate(_require(data, "taxels", "gripper"))]
    try:
        chain = KinematicChain(tuple(links), tuple(mounts))
    except InvalidArgumentError as exc:
        raise SceneFormatError(f"bad gripper chain: {exc}") from exc
    return GripperSpec(chain=chain,
                       samples_per_link=int(data.get("samples_per_link", DEFAULT_SAMPLES_PER_LINK)),
                       seed=int(data.get("seed", 0)))


def gripper_spec_to_dict(spec: GripperSpec) -> dict:
    return {"chain": [_link_to_dict(link) for link in spec.chain.links],
            "taxels": [{"link": m.link, "transform": m.transform.to_dict()}
                       for m in spec.chain.taxels],
            "samples_per_link": spec.samples_per_link,
            "seed": spec.seed}


def _previous_from_dict(data: dict) -> PreviousFrame:
    prev_taxels = None
    if "taxel_poses" in data:
        prev_taxels = tuple(_pose_from(p, "previous.taxel_poses") for p in data["taxel_poses"])
    active = np.array(data["taxel_active"], dtype=bool) if "taxel_active" in data else None
    return PreviousFrame(pose=_pose_from(_require(data, "pose", "previous"), "previous.pose"),
                         patch_indices=np.array(_require(data, "patch_indices", "previous"),
                                                dtype=np.int64),
                         taxel_poses=prev_taxels,
                         taxel_active=active)


def _previous_to_dict(prev: PreviousFrame) -> dict:
    out = {"pose": prev.pose.to_dict(),
           "patch_indices": [int(i) for i in prev.patch_indices]}
    if prev.taxel_poses is not None:
        out["taxel_poses"] = [p.to_dict() for p in prev.taxel_poses]
    if prev.taxel_active is not None:
        out["taxel_active"] = [bool(b) for b in prev.taxel_active]
    return out


def frame_spec_from_dict(data: dict) -> FrameSpec:
    gt = _pose_from(data["ground_truth_pose"], "frame.ground_truth_pose") \
        if "ground_truth_pose" in data else None
    previous = _previous_from_dict(data["previous"]) if "previous" in data else None
    return FrameSpec(
        joints=np.array(_require(data, "joints", "frame"), dtype=np.float64),
        base_pose=_pose_from(_require(data, "base_pose", "frame"), "frame.base_pose"),
        taxel_values=np.array(_require(data, "taxel_values", "frame"), dtype=np.float64),
        threshold=float(data.get("threshold", DEFAULT_TAXEL_THRESHOLD)),
        visual_pose=_pose_from(_require(data, "visual_pose", "frame"), "frame.visual_pose"),
        ground_truth_pose=gt,
        previous=previous,
    )


def frame_spec_to_dict(frame: FrameSpec) -> dict:
    out = {"joints": [float(x) for x in frame.joints],
           "base_pose": frame.base_pose.to_dict(),
           "taxel_values": [float(x) for x in frame.taxel_values],
           "threshold": frame.threshold,
           "visual_pose": frame.visual_pose.to_dict()}
    if frame.ground_truth_pose is not None:
        out["ground_truth_pose"] = frame.ground_truth_pose.to_dict()
    if frame.previous is not None:
        out["previous"] = _previous_to_dict(frame.previous)
    return out


def scene_document_from_dict(data: dict, base_dir: Optional[Path] = None,
                             scene_id: str = "") -> SceneDocument:
    return SceneDocument(
        object=object_spec_from_dict(_require(data, "object", "scene"), base_dir),
        gripper=gripper_spec_from_dict(_require(data, "gripper", "scene"), base_dir),
        frame=frame_spec_from_dict(_require(data, "frame", "scene")),
        scene_id=scene_id or str(data.get("scene_id", "")),
    )


def scene_document_to_dict(doc: SceneDocument) -> dict:
    out = {"object": object_spec_to_dict(doc.object),
           "gripper": gripper_spec_to_dict(doc.gripper),
           "frame": frame_spec_to_dict(doc.frame)}
    if doc.scene_id:
        out["scene_id"] = doc.scene_id
    return out


def load_scene(path) -> Scene:
    """Read a scene JSON file and assemble the Scene it describes."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc
    doc = scene_document_from_dict(data, base_dir=path.parent, scene_id=path.stem)
    return build_scene(doc)


def save_scene_document(doc: SceneDocument, path) -> None:
    Path(path).write_text(json.dumps(scene_document_to_dict(doc), indent=1) + "\n",
                          encoding="utf-8")
