import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from supportlab.errors import NonUnitDirection

DIRECTION_TOLERANCE = 1e-10


class SpaceTag(str, Enum):
    SIGMA = "sigma"
    SPHERE = "sphere"


def _check_unit(U: np.ndarray) -> None:
    if U.size and np.any(np.abs(np.linalg.norm(U, axis=-1) - 1.0) > DIRECTION_TOLERANCE):
        raise NonUnitDirection("atom direction is not a unit vector")


@dataclass(frozen=True)
class SupportPoint:
    """A pair (x, u) of a point and a unit direction."""

    x: Tuple[float, ...]
    u: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        if len(self.x) != len(self.u):
            raise ValueError("x and u must have the same dimension")
        _check_unit(np.asarray(self.u))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """
    Weighted atoms on Σ^n = R^n × S^{n-1} (rows ``[x, u]``) or on S^{n-1} (rows ``u``).

    ``signed`` marks measures produced by signed combinations, whose weights may be
    negative; ``stderr`` is the Monte-Carlo standard error of the total mass, if known.
    """

    space: SpaceTag
    dim: int
    locations: np.ndarray
    weights: np.ndarray
    signed: bool = False
    stderr: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        width = 2 * self.dim if self.space is SpaceTag.SIGMA else self.dim
        locations = np.array(self.locations, dtype=float).reshape(-1, width)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if locations.shape[0] != weights.shape[0]:
            raise ValueError("one weight is required per atom")
        if not (np.all(np.isfinite(locations)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms must be finite")
        if not self.signed and np.any(weights < 0):
            raise ValueError("unsigned measure with negative weight")
        _check_unit(self.directions_of(locations))
        locations.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def empty(cls, space: SpaceTag, dim: int) -> "DiscreteMeasure":
        width = 2 * dim if space is SpaceTag.SIGMA else dim
        return cls(space, dim, np.zeros((0, width)), np.zeros(0))

    @classmethod
    def from_atoms(cls, atoms: Sequence[Tuple[SupportPoint, float]], dim: int) -> "DiscreteMeasure":
        if not atoms:
            return cls.empty(SpaceTag.SIGMA, dim)
        locations = np.array([p.as_array() for p, _ in atoms])
        weights = np.array([w for _, w in atoms], dtype=float)
        return cls(SpaceTag.SIGMA, dim, locations, weights, signed=bool(np.any(weights < 0)))

    def directions_of(self, locations: np.ndarray) -> np.ndarray:
        return locations[:, self.dim:] if self.space is SpaceTag.SIGMA else locations

    @property
    def positions(self) -> np.ndarray:
        if self.space is not SpaceTag.SIGMA:
            raise ValueError("sphere measures have no position slot")
        return self.locations[:, :self.dim]

    @property
    def directions(self) -> np.ndarray:
        return self.directions_of(self.locations)

    @cached_property
    def total_mass(self) -> float:
        return math.fsum(self.weights.tolist())

    @cached_property
    def negative_mass(self) -> float:
        return -math.fsum(self.weights[self.weights < 0].tolist())

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def atoms(self) -> Iterator[Tuple[SupportPoint, float]]:
        if self.space is not SpaceTag.SIGMA:
            raise ValueError("atoms() is defined for Σ^n measures")
        for row, w in zip(self.locations, self.weights):
            yield SupportPoint(row[:self.dim], row[self.dim:]), float(w)

    def scaled(self, alpha: float) -> "DiscreteMeasure":
        stderr = None if self.stderr is None else abs(alpha) * self.stderr
        return replace(self, weights=self.weights * alpha, signed=self.signed or alpha < 0, stderr=stderr)

    def shifted(self, t: Sequence[float]) -> "DiscreteMeasure":
        """Translate the position slot by t; directions are unchanged."""
        if self.space is not SpaceTag.SIGMA:
            raise ValueError("only Σ^n measures can be translated")
        locations = np.array(self.locations)
        locations[:, :self.dim] += np.asarray(t, dtype=float)
        return replace(self, locations=locations)

    def canonicalized(self) -> "DiscreteMeasure":
        """Atoms sorted lexicographically by location, then weight."""
        if len(self) == 0:
            return self
        keys = [self.weights] + [self.locations[:, k] for k in range(self.locations.shape[1] - 1, -1, -1)]
        order = np.lexsort(keys)
        return replace(self, locations=self.locations[order], weights=self.weights[order])

    def combined(self, other: "DiscreteMeasure", sign: float = 1.0) -> "DiscreteMeasure":
        """Atoms of both measures; the other's weights are multiplied by ``sign``."""
        if (self.space, self.dim) != (other.space, other.dim):
            raise ValueError("measures live on different spaces")
        return DiscreteMeasure(self.space, self.dim, np.vstack([self.locations, other.locations]),
                               np.concatenate([self.weights, sign * other.weights]),
                               signed=self.signed or other.signed or sign < 0)


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    """Λ_0 … Λ_{n-1} of one body, with provenance."""

    body: object
    measures: List[DiscreteMeasure]
    sample_count: int
    seed: int
    radii: Tuple[float, ...]
    stderrs: Tuple[float, ...] = ()
    box_volume: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.body.dim
        if len(self.measures) != n:
            raise ValueError(f"a family in R^{n} carries {n} measures, got {len(self.measures)}")

    def __getitem__(self, i: int) -> DiscreteMeasure:
        return self.measures[i]

    def __len__(self) -> int:
        return len(self.measures)

    def masses(self) -> List[float]:
        return [m.total_mass for m in self.measures]

    def check_masses(self, tolerance: float) -> List[int]:
        """Indices whose total mass is below -tolerance."""
        return [i for i, m in enumerate(self.measures) if m.total_mass < -tolerance]
