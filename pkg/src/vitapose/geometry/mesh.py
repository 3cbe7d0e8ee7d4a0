"""Triangle meshes: validation, area-weighted surface sampling, OBJ/PLY input."""

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError, MeshFormatError
from .pointcloud import PointCloud

DEGENERATE_AREA = 1e-16


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices in meters and CCW-wound triangles with outward normals."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3 or verts.shape[0] < 3:
            raise InvalidArgumentError(f"vertices must be (n>=3, 3), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3 or tris.shape[0] < 1:
            raise InvalidArgumentError(f"triangles must be (m>=1, 3), got {tris.shape}")
        if not np.all(np.isfinite(verts)):
            raise InvalidArgumentError("vertices must be finite")
        if tris.min() < 0 or tris.max() >= verts.shape[0]:
            raise MeshFormatError("triangle indices out of range")
        cross = np.cross(verts[tris[:, 1]] - verts[tris[:, 0]],
                         verts[tris[:, 2]] - verts[tris[:, 0]])
        if np.any(0.5 * np.linalg.norm(cross, axis=1) <= DEGENERATE_AREA):
            raise MeshFormatError("mesh contains a degenerate triangle")
        verts.flags.writeable = False
        tris.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @cached_property
    def _cross(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        return np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    def face_normals(self) -> np.ndarray:
        """Unit normals of the CCW winding (outward for well-formed meshes)."""
        return self._cross / np.linalg.norm(self._cross, axis=1, keepdims=True)

    def surface_area(self) -> float:
        return float(self.face_areas().sum())

    def to_dict(self) -> dict:
        return {"vertices": [[float(x) for x in row] for row in self.vertices],
                "triangles": [[int(i) for i in row] for row in self.triangles]}

    @classmethod
    def from_dict(cls, data: dict) -> "TriangleMesh":
        return cls(np.array(data["vertices"], dtype=np.float64),
                   np.array(data["triangles"], dtype=np.int64))


def sample_mesh_surface(mesh: TriangleMesh, count: int, seed) -> PointCloud:
    """Area-weighted surface samples with face normals, deterministic per seed.

    Faces are chosen by inverting the cumulative area; positions use the
    square-root barycentric trick, which is uniform within each face.
    """
    if count <= 0:
        raise InvalidArgumentError("sample count must be positive")
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    cumulative = np.cumsum(areas)
    picks = np.searchsorted(cumulative, rng.random(count) * cumulative[-1], side="right")
    picks = np.minimum(picks, len(areas) - 1)
    a = mesh.vertices[mesh.triangles[picks, 0]]
    b = mesh.vertices[mesh.triangles[picks, 1]]
    c = mesh.vertices[mesh.triangles[picks, 2]]
    s = np.sqrt(rng.random(count))[:, None]
    r2 = rng.random(count)[:, None]
    points = (1.0 - s) * a + s * (1.0 - r2) * b + s * r2 * c
    normals = mesh.face_normals()[picks]
    return PointCloud(points, normals)


def _parse_obj_index(token: str, vertex_count: int, line_no: int) -> int:
    raw = token.split("/")[0]
    try:
        value = int(raw)
    except ValueError as exc:
        raise MeshFormatError(f"line {line_no}: bad face index {token!r}") from exc
    idx = value - 1 if value > 0 else vertex_count + value
    if idx < 0 or idx >= vertex_count:
        raise MeshFormatError(f"line {line_no}: face index {value} out of range")
    return idx


def load_obj(path) -> TriangleMesh:
    """ASCII OBJ subset: v and f records, polygons fan-triangulated."""
    vertices = []
    triangles = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshFormatError(f"line {line_no}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError as exc:
                    raise MeshFormatError(f"line {line_no}: bad vertex coordinate") from exc
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise MeshFormatError(f"line {line_no}: face needs 3+ indices")
                idx = [_parse_obj_index(tok, len(vertices), line_no) for tok in parts[1:]]
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
    if not vertices or not triangles:
        raise MeshFormatError(f"{path}: no usable geometry (v/f records)")
    try:
        return TriangleMesh(np.array(vertices), np.array(triangles))
    except InvalidArgumentError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


_PLY_SCALAR_BYTES = {"float": 4, "float32": 4, "double": 8, "float64": 8,
                     "int": 4, "int32": 4, "uint": 4, "uint32": 4,
                     "short": 2, "ushort": 2, "int16": 2, "uint16": 2,
                     "char": 1, "uchar": 1, "int8": 1, "uint8": 1}


def load_ply(path) -> TriangleMesh:
    """Binary little-endian PLY subset: float32 x/y/z vertices, int32 face lists."""
    data = Path(path).read_bytes()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply") or end < 0:
        raise MeshFormatError(f"{path}: not a PLY file")
    header = data[:end].decode("ascii", errors="replace").splitlines()
    body = data[end + len(b"end_header\n"):]

    if not any(line.strip() == "format binary_little_endian 1.0" for line in header):
        raise MeshFormatError(f"{path}: only binary_little_endian 1.0 is supported")

    elements = []  # (name, count, [property specs])
    for line in header:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property" and elements:
            elements[-1][2].append(parts[1:])

    vertices = None
    faces = []
    offset = 0
    for name, count, props in elements:
        if name == "vertex":
            stride = 0
            coord_offsets = {}
            for spec in props:
                if spec[0] == "list":
                    raise MeshFormatError(f"{path}: list property in vertex element")
                if spec[-1] in ("x", "y", "z"):
                    if spec[0] not in ("float", "float32"):
                        raise MeshFormatError(f"{path}: vertex coordinates must be float32")
                    coord_offsets[spec[-1]] = stride
                stride += _PLY_SCALAR_BYTES.get(spec[0], 0)
            if sorted(coord_offsets) != ["x", "y", "z"]:
                raise MeshFormatError(f"{path}: vertex element must provide x, y, z")
            raw = np.frombuffer(body, dtype=np.uint8, count=count * stride, offset=offset)
            raw = raw.reshape(count, stride)
            cols = []
            for axis in ("x", "y", "z"):
                start = coord_offsets[axis]
                cols.append(raw[:, start:start + 4].copy().view("<f4")[:, 0])
            vertices = np.stack(cols, axis=1).astype(np.float64)
            offset += count * stride
        elif name == "face":
            if len(props) != 1 or props[0][0] != "list":
                raise MeshFormatError(f"{path}: face element must be a single list property")
            count_type, index_type = props[0][1], props[0][2]
            count_size = _PLY_SCALAR_BYTES.get(count_type)
            if count_size is None or _PLY_SCALAR_BYTES.get(index_type) != 4:
                raise MeshFormatError(f"{path}: face lists must use int32 indices")
            for _ in range(count):
                if offset + count_size > len(body):
                    raise MeshFormatError(f"{path}: truncated face data")
                n = int.from_bytes(body[offset:offset + count_size], "little")
                offset += count_size
                need = 4 * n
                if n < 3 or offset + need > len(body):
                    raise MeshFormatError(f"{path}: bad face record")
                idx = struct.unpack(f"<{n}i", body[offset:offset + need])
                offset += need
                for k in range(1, n - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        else:
            raise MeshFormatError(f"{path}: unsupported element {name!r}")

    if vertices is None or not faces:
        raise MeshFormatError(f"{path}: missing vertex or face element")
    try:
        return TriangleMesh(vertices, np.array(faces, dtype=np.int64))
    except InvalidArgumentError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def load_mesh(path) -> TriangleMesh:
    """Dispatch on suffix: .obj (ASCII) or .ply (binary little-endian)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return load_obj(path)
    if suffix == ".ply":
        return load_ply(path)
    raise MeshFormatError(f"unsupported mesh format {suffix!r} (use .obj or .ply)")
