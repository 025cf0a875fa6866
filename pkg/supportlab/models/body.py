from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np

from supportlab.constants import MAX_DIMENSION
from supportlab.errors import InvalidBody

UNIT_TOLERANCE = 1e-12


class BodyKind(str, Enum):
    VPOLYTOPE = "vpolytope"
    HPOLYTOPE = "hpolytope"
    BALL = "ball"
    BALLCUT = "ballcut"


def _frozen(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if array is None:
        return None
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """
    A convex body in R^n: a V- or H-polytope, a ball, or a ball cut by halfspaces,
    optionally enlarged by Minkowski addition of a ball of radius ``outer_radius``.

    Instances are immutable; derived data (hull equations, face lists) is memoised
    in ``cache`` by the kind strategies.
    """

    kind: BodyKind
    dim: int
    vertices: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None
    offsets: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    outer_radius: float = 0.0
    label: str = ""
    cache: Dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1 or self.dim > MAX_DIMENSION:
            raise InvalidBody(f"dimension must be in 1..{MAX_DIMENSION}, got {self.dim}")
        if not np.isfinite(self.outer_radius) or self.outer_radius < 0:
            raise InvalidBody("outer_radius must be a finite length >= 0")
        for name in ("vertices", "normals", "offsets", "center"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

        if self.kind is BodyKind.VPOLYTOPE:
            if self.vertices is None or self.vertices.ndim != 2 or self.vertices.shape[0] == 0:
                raise InvalidBody("a V-polytope needs a non-empty vertex list")
            if self.vertices.shape[1] != self.dim:
                raise InvalidBody("vertex coordinates do not match the dimension")
        if self.kind in (BodyKind.HPOLYTOPE, BodyKind.BALLCUT):
            self._check_halfspaces()
        if self.kind in (BodyKind.BALL, BodyKind.BALLCUT):
            if self.center is None or self.center.shape != (self.dim,):
                raise InvalidBody("ball center does not match the dimension")
            if not np.isfinite(self.radius) or self.radius <= 0:
                raise InvalidBody("ball radius must be > 0; use a V-polytope for a point")
        for name in ("vertices", "normals", "offsets", "center"):
            value = getattr(self, name)
            if value is not None and not np.all(np.isfinite(value)):
                raise InvalidBody(f"{name} contains non-finite values")

        from supportlab.kinds import strategy_for
        strategy_for(self.kind).validate(self)

    def _check_halfspaces(self):
        if self.normals is None or self.offsets is None:
            if self.kind is BodyKind.HPOLYTOPE:
                raise InvalidBody("an H-polytope needs a halfspace list")
            object.__setattr__(self, "normals", _frozen(np.zeros((0, self.dim))))
            object.__setattr__(self, "offsets", _frozen(np.zeros(0)))
            return
        if self.normals.ndim != 2 or self.normals.shape[1] != self.dim:
            raise InvalidBody("halfspace normals do not match the dimension")
        if self.offsets.shape != (self.normals.shape[0],):
            raise InvalidBody("one offset is required per halfspace normal")
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
            raise InvalidBody("halfspace normals must have unit Euclidean norm")

    # -- constructors -------------------------------------------------------

    @classmethod
    def vpolytope(cls, vertices: Sequence[Sequence[float]], outer_radius: float = 0.0,
                  label: str = "") -> "ConvexBody":
        from supportlab.kinds.vpolytope import reduce_vertices
        points = np.atleast_2d(np.asarray(vertices, dtype=float))
        return cls(kind=BodyKind.VPOLYTOPE, dim=points.shape[1], vertices=reduce_vertices(points),
                   outer_radius=outer_radius, label=label)

    @classmethod
    def hpolytope(cls, normals: Sequence[Sequence[float]], offsets: Sequence[float],
                  outer_radius: float = 0.0, normalize: bool = False, label: str = "") -> "ConvexBody":
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if normalize:
            a, b = _normalize_halfspaces(a, b)
        return cls(kind=BodyKind.HPOLYTOPE, dim=a.shape[1], normals=a, offsets=b,
                   outer_radius=outer_radius, label=label)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float, outer_radius: float = 0.0,
             label: str = "") -> "ConvexBody":
        c = np.asarray(center, dtype=float).reshape(-1)
        if radius == 0:
            return cls.vpolytope([c], outer_radius=outer_radius, label=label)
        return cls(kind=BodyKind.BALL, dim=c.shape[0], center=c, radius=float(radius),
                   outer_radius=outer_radius, label=label)

    @classmethod
    def ballcut(cls, center: Sequence[float], radius: float, normals: Sequence[Sequence[float]],
                offsets: Sequence[float], outer_radius: float = 0.0, normalize: bool = False,
                label: str = "") -> "ConvexBody":
        c = np.asarray(center, dtype=float).reshape(-1)
        a = np.asarray(normals, dtype=float).reshape(-1, c.shape[0])
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if normalize:
            a, b = _normalize_halfspaces(a, b)
        if radius == 0:
            if np.all(a @ c <= b + 1e-12):
                return cls.vpolytope([c], outer_radius=outer_radius, label=label)
            raise InvalidBody("degenerate ball cut is empty")
        return cls(kind=BodyKind.BALLCUT, dim=c.shape[0], center=c, radius=float(radius),
                   normals=a, offsets=b, outer_radius=outer_radius, label=label)

    # -- derived bodies -----------------------------------------------------

    def translated(self, t: Sequence[float]) -> "ConvexBody":
        """K + t; halfspace offsets shift by normal·t."""
        t = np.asarray(t, dtype=float).reshape(-1)
        if t.shape != (self.dim,):
            raise InvalidBody("translation does not match the dimension")
        changes: Dict[str, Any] = {"cache": {}}
        if self.vertices is not None:
            changes["vertices"] = self.vertices + t
        if self.normals is not None:
            changes["offsets"] = self.offsets + self.normals @ t
        if self.center is not None:
            changes["center"] = self.center + t
        return replace(self, **changes)

    def with_outer_radius(self, outer_radius: float) -> "ConvexBody":
        return replace(self, outer_radius=float(outer_radius), cache={})

    def with_halfspaces(self, normals: np.ndarray, offsets: np.ndarray) -> "ConvexBody":
        """Intersect with extra halfspaces; balls become ball cuts."""
        if self.kind not in (BodyKind.BALL, BodyKind.BALLCUT, BodyKind.HPOLYTOPE):
            raise InvalidBody(f"cannot add halfspaces to a {self.kind.value}")
        a = np.asarray(normals, dtype=float).reshape(-1, self.dim)
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if self.normals is not None:
            a = np.vstack([self.normals, a])
            b = np.concatenate([self.offsets, b])
        kind = BodyKind.HPOLYTOPE if self.kind is BodyKind.HPOLYTOPE else BodyKind.BALLCUT
        return replace(self, kind=kind, normals=a, offsets=b, cache={})

    def relabeled(self, label: str) -> "ConvexBody":
        return replace(self, label=label, cache=self.cache)

    @property
    def has_curved_part(self) -> bool:
        return self.kind in (BodyKind.BALL, BodyKind.BALLCUT) or self.outer_radius > 0

    def describe(self) -> Dict[str, Any]:
        """Short summary for log records and experiment reports."""
        info: Dict[str, Any] = {"kind": self.kind.value, "dim": self.dim,
                                "outer_radius": self.outer_radius}
        if self.label:
            info["label"] = self.label
        if self.vertices is not None:
            info["vertex_count"] = int(self.vertices.shape[0])
        if self.normals is not None:
            info["halfspace_count"] = int(self.normals.shape[0])
        if self.center is not None:
            info["radius"] = self.radius
        return info


def _normalize_halfspaces(a: np.ndarray, b: np.ndarray):
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms == 0):
        raise InvalidBody("halfspace normal of zero length")
    return a / norms[:, None], b / norms
