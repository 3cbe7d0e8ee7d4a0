"""Primitive object meshes with analytic center-to-surface distances."""

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import TriangleMesh

SHAPE_KINDS = ("sphere", "box", "cylinder")


def box_mesh(extents) -> TriangleMesh:
    """Axis-aligned box centered at the origin; extents are full edge lengths."""
    ext = np.asarray(extents, dtype=np.float64)
    if ext.shape != (3,) or np.any(ext <= 0):
        raise InvalidArgumentError("box extents must be 3 positive lengths")
    half = ext / 2.0
    vertices = []
    triangles = []
    axes = np.eye(3)
    for axis in range(3):
        u = axes[axis]
        t1 = axes[(axis + 1) % 3]
        t2 = axes[(axis + 2) % 3]
        for sign in (1.0, -1.0):
            # Quad wound so (v1-v0) x (v2-v0) points along the outward normal.
            a, b = (t1, t2) if sign > 0 else (t2, t1)
            base = len(vertices)
            ha, hb = half @ a, half @ b
            center = sign * half[axis] * u
            vertices.extend([center - ha * a - hb * b, center + ha * a - hb * b,
                             center + ha * a + hb * b, center - ha * a + hb * b])
            triangles.extend([[base, base + 1, base + 2], [base, base + 2, base + 3]])
    return TriangleMesh(np.array(vertices), np.array(triangles, dtype=np.int64))


def sphere_mesh(radius: float, rings: int = 16, segments: int = 32) -> TriangleMesh:
    """Latitude-longitude sphere centered at the origin."""
    if radius <= 0 or rings < 3 or segments < 3:
        raise InvalidArgumentError("bad sphere parameters")
    vertices = [np.array([0.0, 0.0, radius])]
    for i in range(1, rings):
        theta = np.pi * i / rings
        for j in range(segments):
            phi = 2.0 * np.pi * j / segments
            vertices.append(radius * np.array([np.sin(theta) * np.cos(phi),
                                               np.sin(theta) * np.sin(phi),
                                               np.cos(theta)]))
    vertices.append(np.array([0.0, 0.0, -radius]))
    south = len(vertices) - 1

    def ring_vertex(i, j):
        return 1 + (i - 1) * segments + (j % segments)

    triangles = []
    for j in range(segments):
        triangles.append([0, ring_vertex(1, j), ring_vertex(1, j + 1)])
    for i in range(1, rings - 1):
        for j in range(segments):
            a = ring_vertex(i, j)
            b = ring_vertex(i + 1, j)
            c = ring_vertex(i + 1, j + 1)
            d = ring_vertex(i, j + 1)
            triangles.extend([[a, b, c], [a, c, d]])
    for j in range(segments):
        triangles.append([south, ring_vertex(rings - 1, j + 1), ring_vertex(rings - 1, j)])
    return TriangleMesh(np.array(vertices), np.array(triangles, dtype=np.int64))


def cylinder_mesh(radius: float, height: float, segments: int = 32) -> TriangleMesh:
    """Z-axis cylinder centered at the origin, with capped ends."""
    if radius <= 0 or height <= 0 or segments < 3:
        raise InvalidArgumentError("bad cylinder parameters")
    h = height / 2.0
    ring = [np.array([radius * np.cos(2 * np.pi * j / segments),
                      radius * np.sin(2 * np.pi * j / segments), 0.0])
            for j in range(segments)]
    top = [p + np.array([0.0, 0.0, h]) for p in ring]
    bottom = [p + np.array([0.0, 0.0, -h]) for p in ring]
    vertices = top + bottom + [np.array([0.0, 0.0, h]), np.array([0.0, 0.0, -h])]
    top_center = 2 * segments
    bottom_center = 2 * segments + 1

    triangles = []
    for j in range(segments):
        k = (j + 1) % segments
        # lateral quad: top j, bottom j, bottom k, top k
        triangles.extend([[j, segments + j, segments + k], [j, segments + k, k]])
        triangles.append([top_center, j, k])
        triangles.append([bottom_center, segments + k, segments + j])
    return TriangleMesh(np.array(vertices), np.array(triangles, dtype=np.int64))


def make_shape(spec: dict) -> TriangleMesh:
    """Build a primitive mesh from {"kind": ..., dimensions...}."""
    kind = spec.get("kind")
    if kind == "sphere":
        return sphere_mesh(float(spec["radius"]))
    if kind == "box":
        return box_mesh(spec["extents"])
    if kind == "cylinder":
        return cylinder_mesh(float(spec["radius"]), float(spec["height"]))
    raise InvalidArgumentError(f"unknown shape kind {kind!r}; use one of {SHAPE_KINDS}")


def support_distance(spec: dict, direction: np.ndarray) -> float:
    """Distance from the center to the surface along a body-frame ray."""
    u = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(u)
    if norm <= 0:
        raise InvalidArgumentError("direction must be nonzero")
    u = u / norm
    kind = spec.get("kind")
    if kind == "sphere":
        return float(spec["radius"])
    if kind == "box":
        half = np.asarray(spec["extents"], dtype=np.float64) / 2.0
        with np.errstate(divide="ignore"):
            ratios = np.where(np.abs(u) > 1e-12, half / np.abs(u), np.inf)
        return float(ratios.min())
    if kind == "cylinder":
        candidates = []
        radial = np.linalg.norm(u[:2])
        if radial > 1e-12:
            candidates.append(float(spec["radius"]) / radial)
        if abs(u[2]) > 1e-12:
            candidates.append(float(spec["height"]) / 2.0 / abs(u[2]))
        return min(candidates)
    raise InvalidArgumentError(f"unknown shape kind {kind!r}")


def random_shape(rng: np.random.Generator) -> dict:
    """Draw a primitive spec at tabletop scale (4 to 9 cm across)."""
    kind = SHAPE_KINDS[rng.integers(len(SHAPE_KINDS))]
    if kind == "sphere":
        return {"kind": "sphere", "radius": float(rng.uniform(0.025, 0.045))}
    if kind == "box":
        return {"kind": "box", "extents": [float(x) for x in rng.uniform(0.04, 0.09, 3)]}
    return {"kind": "cylinder", "radius": float(rng.uniform(0.02, 0.04)),
            "height": float(rng.uniform(0.05, 0.09))}
