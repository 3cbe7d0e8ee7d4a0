import numpy as np
import pytest

from vitapose.geometry import PointCloud, Pose
from vitapose.scene import build_scene
from vitapose.synthbench import GraspSpec, NoiseModel, generate_scene


def random_pose(rng: np.random.Generator, span: float = 0.5) -> Pose:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, np.pi)
    from vitapose.geometry import exp_map

    return Pose(exp_map(axis * angle), rng.uniform(-span, span, 3))


def small_scene(seed: int, noise: NoiseModel = None, **kwargs):
    """Scene sized for fast per-test work; object 256 points, 48 per pad."""
    kwargs.setdefault("sample_count", 256)
    kwargs.setdefault("samples_per_link", 48)
    doc = generate_scene(seed, visual_noise=noise, **kwargs)
    return build_scene(doc)


def sphere_cloud(n: int, radius: float, seed: int = 0) -> PointCloud:
    """Uniform points on a sphere with exact outward normals."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return PointCloud(points=pts * radius, normals=pts.copy())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
