import math
import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from supportlab.models.body import BodyKind, ConvexBody

logger = logging.getLogger(__name__)

FAMILY_KINDS = ("translate", "cap_cut", "minkowski_round", "vertex_jitter")


class ExperimentRecord(BaseModel):
    """One ladder step: a body pair, its Hausdorff distance and per-index d_bL values."""

    step: int = Field(..., ge=0)
    epsilon: float = Field(..., gt=0)
    body_ids: List[str]
    delta: float = Field(..., ge=0, description="Hausdorff distance of the pair")
    radius: float = Field(..., gt=0, description="Circumradius bound R over both bodies")
    indices: List[int] = Field(default_factory=list)
    dbl: List[float] = Field(default_factory=list)
    dbl_stderr: List[float] = Field(default_factory=list)
    coarsening_bound: List[float] = Field(default_factory=list)
    ratios: List[Optional[float]] = Field(default_factory=list, description="d_bL / delta^(1/2)")
    samples: int = Field(..., gt=0)
    seed: int = Field(..., ge=0)
    wall_time: float = Field(0.0, ge=0, description="Seconds; kept out of reports")
    error: Optional[str] = None

    @model_validator(mode="after")
    def check_lengths(self):
        sizes = {len(self.indices), len(self.dbl), len(self.dbl_stderr), len(self.coarsening_bound), len(self.ratios)}
        if self.error is None and len(sizes) != 1:
            raise ValueError("per-index columns must have one entry per index")
        if self.delta > 0 and any(r is None or not math.isfinite(r) for r in self.ratios):
            raise ValueError("ratios must be finite when delta > 0")
        return self

    @property
    def failed(self) -> bool:
        return self.error is not None

    def report_dict(self) -> dict:
        return self.model_dump(exclude={"wall_time"})


class PerturbationFamily:
    """
    A one-parameter family of bodies converging to a base body.

    translate shifts by ε along ``direction``; minkowski_round adds ε to the outer
    radius; vertex_jitter moves every vertex by ε along its own random unit vector,
    the directions drawn once from ``seed``; cap_cut ignores the given body and cuts
    caps of radius ε off the ball of an (index+1)-dimensional subspace.
    """

    def __init__(self, kind: str, direction=None, index: int = 1, seed: int = 0, dimension: Optional[int] = None):
        if kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family {kind!r}; use one of {FAMILY_KINDS}")
        self.kind = kind
        self.direction = None if direction is None else np.asarray(direction, dtype=float)
        self.index = index
        self.seed = seed
        self.dimension = dimension
        if kind == "translate" and self.direction is None:
            raise ValueError("translate family needs a direction")
        if kind == "cap_cut" and dimension is None:
            raise ValueError("cap_cut family needs a dimension")

    @classmethod
    def from_spec(cls, spec, dimension: Optional[int] = None) -> "PerturbationFamily":
        return cls(spec.kind, direction=spec.direction, index=spec.index, seed=spec.seed, dimension=dimension)

    def base_body(self, body: Optional[ConvexBody] = None) -> ConvexBody:
        if self.kind == "cap_cut":
            from supportlab.caps import subspace_ball
            return subspace_ball(self.dimension, self.index)
        if body is None:
            raise ValueError(f"family {self.kind} needs a base body")
        return body

    def perturb(self, body: ConvexBody, eps: float) -> ConvexBody:
        if self.kind == "translate":
            norm = float(np.linalg.norm(self.direction))
            shift = self.direction / norm if norm > 0 else self.direction
            return body.translated(eps * shift).relabeled(f"{body.label or 'K'}+{eps:g}u")
        if self.kind == "minkowski_round":
            return body.with_outer_radius(body.outer_radius + eps).relabeled(f"{body.label or 'K'}+{eps:g}B")
        if self.kind == "vertex_jitter":
            return self._jitter(body, eps)
        from supportlab.caps import build_cap_packing, cap_cut_body
        return cap_cut_body(build_cap_packing(self.dimension, self.index, eps))

    def _jitter(self, body: ConvexBody, eps: float) -> ConvexBody:
        from supportlab.kinds import strategy_for
        if body.kind not in (BodyKind.VPOLYTOPE, BodyKind.HPOLYTOPE):
            raise ValueError("vertex_jitter needs a polytope")
        vertices = strategy_for(body.kind).vertices(body)
        rng = np.random.default_rng(self.seed)
        moves = rng.standard_normal(vertices.shape)
        moves /= np.linalg.norm(moves, axis=1, keepdims=True)
        return ConvexBody.vpolytope(vertices + eps * moves, outer_radius=body.outer_radius,
                                    label=f"{body.label or 'K'}~{eps:g}")

    def describe(self) -> dict:
        info = {"kind": self.kind, "index": self.index, "seed": self.seed}
        if self.direction is not None:
            info["direction"] = self.direction.tolist()
        return info
