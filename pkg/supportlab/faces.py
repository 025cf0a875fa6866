"""
Face lattice of a polytope with face volumes and external angles.

Faces are found as intersections of facet vertex sets, in the affine hull of the
polytope, so lower-dimensional polytopes (segments, polygons in R^3, ...) need no
special treatment: external angles are intrinsic to the polytope.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import ConvexHull, Delaunay, QhullError
from scipy.stats import qmc

from supportlab.config import DEFAULT_SETTINGS, Settings
from supportlab.errors import FaceEnumerationOverflow
from supportlab.kinds import strategy_for
from supportlab.kinds.vpolytope import affine_frame
from supportlab.models.body import BodyKind, ConvexBody
from supportlab.spherenet import sphere_net

logger = logging.getLogger(__name__)

MAX_FACES = 10_000
SOLID_ANGLE_NET = 200_000


@dataclass(frozen=True)
class Face:
    vertex_ids: Tuple[int, ...]
    dim: int
    volume: float
    external_angle: float


def _rank(points: np.ndarray) -> int:
    return affine_frame(points)[1].shape[0]


def _pairwise_angle(normals: np.ndarray) -> float:
    cosines = np.clip(normals @ normals.T, -1.0, 1.0)
    return float(np.arccos(cosines.min()))


def _triangle_solid_angle(a, b, c) -> float:
    numerator = abs(float(np.dot(a, np.cross(b, c))))
    denominator = 1.0 + float(a @ b + b @ c + c @ a)
    return 2.0 * math.atan2(numerator, denominator)


def spherical_polygon_area(normals: np.ndarray) -> float:
    """Area of the spherical convex hull of unit vectors lying in an open hemisphere of S^2."""
    center = normals.sum(axis=0)
    center /= np.linalg.norm(center)
    tangent = null_space(center[None, :]).T
    gnomonic = normals / (normals @ center)[:, None]
    planar = gnomonic @ tangent.T
    hull = ConvexHull(planar)
    ring = normals[hull.vertices]
    return sum(_triangle_solid_angle(center, ring[j], ring[(j + 1) % len(ring)]) for j in range(len(ring)))


def _face_volume(points: np.ndarray, dim: int) -> float:
    if dim == 0:
        return 1.0
    origin, basis = affine_frame(points)
    coords = (points - origin) @ basis.T
    if dim == 1:
        return float(coords.max() - coords.min())
    return float(ConvexHull(coords).volume)


class FaceLattice:
    """All faces of a polytope body (its outer radius is ignored)."""

    def __init__(self, body: ConvexBody, settings: Settings = DEFAULT_SETTINGS):
        if body.kind not in (BodyKind.VPOLYTOPE, BodyKind.HPOLYTOPE):
            raise ValueError(f"face lattice needs a polytope, got {body.kind.value}")
        if body.dim > settings.face_dimension_cap:
            raise FaceEnumerationOverflow(f"face enumeration is limited to n <= {settings.face_dimension_cap}")
        self.body = body
        self.settings = settings
        self.vertices = strategy_for(body.kind).vertices(body)
        if self.vertices.shape[0] > settings.vertex_cap:
            raise FaceEnumerationOverflow(f"{self.vertices.shape[0]} vertices exceed the cap {settings.vertex_cap}")
        self.origin, self.basis = affine_frame(self.vertices)
        self.affine_dim = self.basis.shape[0]
        self.coords = (self.vertices - self.origin) @ self.basis.T
        self._facet_sets, self._facet_normals = self._facets()

    def _facets(self) -> Tuple[List[FrozenSet[int]], np.ndarray]:
        k = self.affine_dim
        if k == 0:
            return [], np.zeros((0, 0))
        if k == 1:
            t = self.coords[:, 0]
            return [frozenset([int(np.argmin(t))]), frozenset([int(np.argmax(t))])], np.array([[-1.0], [1.0]])
        try:
            hull = ConvexHull(self.coords)
        except QhullError as e:
            raise FaceEnumerationOverflow(f"hull computation failed: {e}") from e
        eq = np.unique(np.round(hull.equations, 10), axis=0)
        sets, normals = [], []
        for row in eq:
            nu = row[:-1] / np.linalg.norm(row[:-1])
            off = row[-1] / np.linalg.norm(row[:-1])
            members = frozenset(np.flatnonzero(np.abs(self.coords @ nu + off) <= 1e-9).tolist())
            if members not in sets:
                sets.append(members)
                normals.append(nu)
        return sets, np.array(normals)

    @cached_property
    def _all_faces(self) -> Dict[FrozenSet[int], int]:
        everything = frozenset(range(self.vertices.shape[0]))
        found: Dict[FrozenSet[int], int] = {everything: self.affine_dim}
        frontier = list(self._facet_sets)
        seen = set(frontier)
        while frontier:
            nxt = []
            for face in frontier:
                for facet in self._facet_sets:
                    sub = face & facet
                    if sub and sub not in seen:
                        seen.add(sub)
                        nxt.append(sub)
            if len(seen) > MAX_FACES:
                raise FaceEnumerationOverflow(f"more than {MAX_FACES} faces")
            frontier = nxt
        for face in seen:
            found[face] = _rank(self.vertices[sorted(face)])
        logger.debug("Face lattice built", extra={"faces": len(found), "vertices": self.vertices.shape[0],
                                                  "affine_dim": self.affine_dim})
        return found

    def _raw_angle(self, face: FrozenSet[int], dim: int) -> float:
        cone_dim = self.affine_dim - dim
        if cone_dim == 0:
            return 1.0
        if cone_dim == 1:
            return 0.5
        normals = self._facet_normals[[j for j, facet in enumerate(self._facet_sets) if face <= facet]]
        if cone_dim == 2:
            return _pairwise_angle(normals) / (2.0 * math.pi)
        if cone_dim == 3:
            points = self.coords[sorted(face)]
            if dim > 0:
                direction = affine_frame(points)[1]
                complement = null_space(direction).T
            else:
                complement = np.eye(self.affine_dim)
            local = normals @ complement.T
            local /= np.linalg.norm(local, axis=1)[:, None]
            return spherical_polygon_area(local) / (4.0 * math.pi)
        # Quasi Monte-Carlo: only vertices of 4-polytopes reach this branch.
        net = sphere_net(self.affine_dim, SOLID_ANGLE_NET, seed=0)
        vertex = self.coords[next(iter(face))]
        inside = np.max(net @ (self.coords - vertex).T, axis=1) <= 0.0
        return float(inside.mean())

    @cached_property
    def faces(self) -> List[Face]:
        result = []
        raw = {}
        for face, dim in self._all_faces.items():
            raw[face] = self._raw_angle(face, dim)
        vertices_4d = [f for f, d in self._all_faces.items() if d == 0 and self.affine_dim - d >= 4]
        if vertices_4d:
            total = sum(raw[f] for f in vertices_4d)
            for f in vertices_4d:
                raw[f] /= total
        for face, dim in sorted(self._all_faces.items(), key=lambda item: (item[1], sorted(item[0]))):
            ids = tuple(sorted(face))
            volume = _face_volume(self.vertices[list(ids)], dim)
            result.append(Face(ids, dim, volume, raw[face]))
        return result

    def faces_of_dim(self, dim: int) -> List[Face]:
        return [f for f in self.faces if f.dim == dim]

    def intrinsic_volumes(self) -> np.ndarray:
        """V_0 … V_n of the polytope."""
        values = np.zeros(self.body.dim + 1)
        for face in self.faces:
            values[face.dim] += face.volume * face.external_angle
        return values

    # -- discretisation --------------------------------------------------------

    def face_points(self, face: Face, mesh: float) -> np.ndarray:
        """Quasi-uniform points of the face with spacing about ``mesh``."""
        points = self.vertices[list(face.vertex_ids)]
        if face.dim == 0:
            return points[:1]
        origin, basis = affine_frame(points)
        coords = (points - origin) @ basis.T
        if face.dim == 1:
            t0, t1 = coords[:, 0].min(), coords[:, 0].max()
            count = max(1, int(math.ceil((t1 - t0) / mesh)))
            t = t0 + (t1 - t0) * (np.arange(count) + 0.5) / count
            return origin + t[:, None] * basis[0]
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        count = int(min(2 ** 16, max(4, math.ceil(np.prod(hi - lo) / mesh ** face.dim))))
        sample = qmc.Sobol(d=face.dim, scramble=True, seed=0).random_base2(int(math.ceil(math.log2(count))))
        candidates = lo + (hi - lo) * sample
        inside = Delaunay(coords).find_simplex(candidates) >= 0
        if not np.any(inside):
            return points.mean(axis=0, keepdims=True)
        return origin + candidates[inside] @ basis

    def normal_directions(self, face: Face, mesh: float) -> np.ndarray:
        """Quasi-uniform unit vectors of the normal cone of the face, in R^n."""
        points = self.vertices[list(face.vertex_ids)]
        n = self.body.dim
        i = face.dim
        direction = affine_frame(points)[1] if i > 0 else np.zeros((0, n))
        complement = null_space(direction).T if i > 0 else np.eye(n)
        d = complement.shape[0]
        count = 2 if d == 1 else max(8, int(math.ceil(d * math.pi ** (d / 2) / math.gamma(d / 2 + 1) / mesh ** (d - 1))))
        local = sphere_net(d, count, seed=0)
        U = local @ complement
        anchor = points.mean(axis=0)
        scale = max(1.0, float(np.abs(self.vertices).max()))
        inside = np.max(U @ (self.vertices - anchor).T, axis=1) <= 1e-12 * scale
        if np.any(inside):
            return U[inside]
        # Tiny cone: use a relative-interior direction.
        ids = [j for j, facet in enumerate(self._facet_sets) if set(face.vertex_ids) <= facet]
        inner = (self._facet_normals[ids] @ self.basis).sum(axis=0) if ids else np.zeros(n)
        if np.linalg.norm(inner) < 1e-12:
            inner = complement[0]
        return (inner / np.linalg.norm(inner))[None, :]
