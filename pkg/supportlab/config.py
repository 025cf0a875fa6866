"""
Configuration models.

Body files and experiment configs are ``key=value`` text read with
``dotenv.dotenv_values`` and validated here; the grammar lives in docs/grammar.md.
"""
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from supportlab.errors import InvalidBody, SupportLabError
from supportlab.models.body import ConvexBody

logger = logging.getLogger(__name__)


class ConfigError(SupportLabError, ValueError):
    """A body or experiment file does not follow the documented grammar."""


class Settings(BaseModel):
    """Numerical knobs shared by all operations."""

    unit_tolerance: float = Field(1e-12, gt=0, description="Allowed deviation of |u| from 1")
    projector: Literal["auto", "faces", "dykstra", "qp"] = Field("auto", description="Projection method for polytopes and ball cuts")
    projection_tolerance: float = Field(1e-10, gt=0, description="Dykstra displacement tolerance")
    max_sweeps: int = Field(10_000, gt=0, description="Dykstra sweep limit")
    max_faces: int = Field(20_000, gt=0, description="Face enumeration cap of the exact projector")
    vertex_cap: int = Field(64, gt=0, description="Largest V-polytope handled by the QP projector")
    feasibility_tolerance: float = Field(1e-9, gt=0, description="Slack for membership tests")
    box_inflation: float = Field(1e-9, ge=0, description="Bounding boxes grow by this much per side")
    hausdorff_resolution: float = Field(1e-4, gt=0, description="Bracket width relative to body scale")
    hausdorff_budget: int = Field(500_000, gt=0, description="Support evaluations per bracket")
    extraction_residual: float = Field(1e-8, gt=0, description="Residual bound of the Vandermonde solve")
    mass_tolerance: float = Field(0.05, ge=0, description="Allowed negative total mass of an extracted measure")
    normal_bundle_tolerance: float = Field(1e-6, gt=0, description="Normal bundle certificate tolerance")
    atom_cap: int = Field(4_000, gt=0, description="Combined atom count accepted by the d_bL LP")
    merge_tolerance: float = Field(1e-12, ge=0, description="Atoms closer than this are one atom")
    lp_backend: Literal["network", "simplex", "highs"] = Field("network", description="LP solver for d_bL")
    lp_max_iterations: int = Field(200_000, gt=0, description="Pivot limit per LP solve")
    quadrature_tolerance: float = Field(1e-10, gt=0, description="Absolute tolerance of 1D quadrature")
    quadrature_mismatch: float = Field(1e-8, gt=0, description="Closed form vs quadrature agreement")
    block_size: int = Field(65_536, gt=0, description="Samples per deterministic block")
    sampler: Literal["box", "rays"] = Field("box", description="Box rejection draws or randomized ray quadrature")
    ray_nodes: int = Field(3, ge=1, le=16, description="Gauss-Legendre nodes per radial panel of a ray")
    ray_replicates: int = Field(8, ge=2, description="Independently rotated direction nets per ray extraction")
    face_dimension_cap: int = Field(4, gt=0, description="Largest dimension of the exact polytope oracle")


DEFAULT_SETTINGS = Settings()


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(token) for token in text.replace(",", " ").split()]
    except ValueError as e:
        raise ValueError(f"not a number list: {text!r}") from e


def _parse_rows(text: str) -> List[List[float]]:
    rows = [_parse_floats(chunk) for chunk in text.split(";") if chunk.strip()]
    if not rows:
        raise ValueError("empty row list")
    if len({len(row) for row in rows}) != 1:
        raise ValueError("rows of unequal length")
    return rows


class BodySpec(BaseModel):
    """One body block of a body file or experiment config."""

    kind: Literal["vpolytope", "hpolytope", "ball", "ballcut"]
    vertices: Optional[List[List[float]]] = None
    halfspaces: Optional[List[List[float]]] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = Field(None, ge=0)
    outer_radius: float = Field(0.0, ge=0)
    normalize: bool = False
    label: str = ""

    @field_validator("vertices", "halfspaces", mode="before")
    @classmethod
    def parse_rows(cls, v):
        if isinstance(v, str):
            return _parse_rows(v)
        return v

    @field_validator("center", mode="before")
    @classmethod
    def parse_point(cls, v):
        if isinstance(v, str):
            return _parse_floats(v)
        return v

    @model_validator(mode="after")
    def check_fields(self):
        needs = {
            "vpolytope": ("vertices",),
            "hpolytope": ("halfspaces",),
            "ball": ("center", "radius"),
            "ballcut": ("center", "radius", "halfspaces"),
        }[self.kind]
        missing = [name for name in needs if getattr(self, name) is None]
        if missing:
            raise ValueError(f"kind={self.kind} requires {', '.join(missing)}")
        return self

    def build(self) -> ConvexBody:
        if self.kind == "vpolytope":
            return ConvexBody.vpolytope(self.vertices, outer_radius=self.outer_radius, label=self.label)
        if self.kind == "ball":
            return ConvexBody.ball(self.center, self.radius, outer_radius=self.outer_radius, label=self.label)
        normals = [row[:-1] for row in self.halfspaces]
        offsets = [row[-1] for row in self.halfspaces]
        if self.kind == "hpolytope":
            return ConvexBody.hpolytope(normals, offsets, outer_radius=self.outer_radius,
                                        normalize=self.normalize, label=self.label)
        return ConvexBody.ballcut(self.center, self.radius, normals, offsets,
                                  outer_radius=self.outer_radius, normalize=self.normalize, label=self.label)


class FamilySpec(BaseModel):
    kind: Literal["translate", "cap_cut", "minkowski_round", "vertex_jitter"]
    direction: Optional[List[float]] = None
    index: int = Field(1, ge=1, description="Subspace index i of the cap-cut family")
    seed: int = Field(0, ge=0)

    @field_validator("direction", mode="before")
    @classmethod
    def parse_direction(cls, v):
        if isinstance(v, str):
            return _parse_floats(v)
        return v


class Theorem1Config(BaseModel):
    """A ladder experiment: base body, perturbation family and scale ladder."""

    body: Optional[BodySpec] = None
    dimension: Optional[int] = Field(None, ge=2, le=6, description="Ambient dimension for cap_cut")
    family: FamilySpec
    ladder: List[float] = Field(..., min_length=2)
    samples: int = Field(20_000, gt=0)
    seed: int = Field(0, ge=0)
    indices: Optional[List[int]] = None
    grid: float = Field(0.1, gt=0, description="Coarsening cell size")

    @field_validator("ladder", "indices", mode="before")
    @classmethod
    def parse_list(cls, v):
        if isinstance(v, str):
            return [float(x) for x in v.replace(",", " ").split()]
        return v

    @field_validator("ladder")
    @classmethod
    def check_ladder(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("ladder values must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("ladder must be strictly decreasing")
        return v

    @field_validator("indices")
    @classmethod
    def check_indices(cls, v):
        if v is None:
            return v
        return [int(i) for i in v]

    @model_validator(mode="after")
    def check_body(self):
        if self.family.kind == "cap_cut":
            if self.dimension is None:
                raise ValueError("family=cap_cut requires dimension")
        elif self.body is None:
            raise ValueError(f"family={self.family.kind} requires a body block")
        return self


class Lemma41Config(BaseModel):
    body_k: BodySpec
    body_l: BodySpec
    rho: float = Field(1.0, gt=0)
    samples: int = Field(20_000, gt=0)
    seed: int = Field(0, ge=0)
    grid: float = Field(0.05, gt=0)


def _nest(values: Dict[str, Optional[str]]) -> Dict[str, Union[str, Dict]]:
    """Turn ``body.kind=...`` style keys into nested dicts."""
    nested: Dict[str, Union[str, Dict]] = {}
    for key, value in values.items():
        if value is None:
            raise ConfigError(f"key {key!r} has no value")
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"key {key!r} clashes with a scalar key")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"key {key!r} clashes with a block")
        node[parts[-1]] = value
    return nested


def read_key_values(path: Union[str, Path]) -> Dict[str, Union[str, Dict]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    values = dotenv_values(path, interpolate=False)
    logger.debug("Read key-value file", extra={"path": str(path), "keys": sorted(values)})
    return _nest(values)


def _validate(model, data, path):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        logger.error("Invalid config file", extra={"path": str(path), "error": str(e), "error_type": type(e).__name__})
        raise ConfigError(f"{path}: {e}") from e


def load_body(path: Union[str, Path]) -> ConvexBody:
    spec = _validate(BodySpec, read_key_values(path), path)
    try:
        return spec.build()
    except InvalidBody as e:
        raise ConfigError(f"{path}: {e}") from e


def load_theorem1_config(path: Union[str, Path]) -> Theorem1Config:
    return _validate(Theorem1Config, read_key_values(path), path)


def load_lemma41_config(path: Union[str, Path]) -> Lemma41Config:
    return _validate(Lemma41Config, read_key_values(path), path)
