"""
Discrete approximations of local parallel measures and support measures.

The shell measure μ_{K,ρ} is the image of volume on K_ρ \\ K under x -> (p_K(x), u_K(x)).
It expands as μ_{K,ρ} = Σ_i ρ^{n-i} κ_{n-i} Λ_i, so n radii determine Λ_0 … Λ_{n-1}.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from supportlab.config import DEFAULT_SETTINGS, Settings
from supportlab.constants import dimension_constants
from supportlab.errors import IllConditioned
from supportlab.faces import FaceLattice
from supportlab.geometry import (bounding_box, box_draws, common_box, interior_point, project_many, ray_crossings,
                                 sample_parallel_shell, support_bracket)
from supportlab.models.body import BodyKind, ConvexBody
from supportlab.models.measure import DiscreteMeasure, MeasureFamily, SpaceTag
from supportlab.spherenet import rotated_nets, sphere_net

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def _coefficients(n: int, tolerance: float) -> Tuple[Tuple[float, ...], np.ndarray]:
    consts = dimension_constants(n)
    radii = tuple(j / n for j in range(1, n + 1))
    M = np.array([[rho ** (n - i) * consts.kappa[n - i] for i in range(n)] for rho in radii])
    a = np.linalg.solve(M, np.eye(n))
    residual = float(np.max(np.abs(M @ a - np.eye(n))))
    if residual > tolerance:
        raise IllConditioned(f"Vandermonde solve residual {residual:.2e} exceeds {tolerance:.0e} for n={n}")
    a.setflags(write=False)
    return radii, a


def extraction_coefficients(n: int, settings: Settings = DEFAULT_SETTINGS) -> Tuple[Tuple[float, ...], np.ndarray]:
    """Radii ρ_j = j/n and the matrix a with Λ_i = Σ_j a[i, j] μ_{K,ρ_j}."""
    return _coefficients(n, settings.extraction_residual)


def empirical_parallel_measure(K: ConvexBody, rho: float, count: int, seed: int,
                               box: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                               settings: Settings = DEFAULT_SETTINGS) -> DiscreteMeasure:
    """
    Atoms (p_K(x), u_K(x)) of the accepted box draws, each weighing box_volume/count.

    ``count`` is the number of box draws, so the total mass is an unbiased estimate
    of the shell volume.
    """
    sample = sample_parallel_shell(K, rho, count, seed, box=box, settings=settings)
    weight = sample.box_volume / count
    p = sample.acceptance_rate
    stderr = sample.box_volume * math.sqrt(p * (1.0 - p) / count)
    locations = np.hstack([sample.feet, sample.directions])
    measure = DiscreteMeasure(SpaceTag.SIGMA, K.dim, locations, np.full(sample.accepted, weight), stderr=stderr)
    logger.info("Empirical parallel measure", extra={"kind": K.kind.value, "dim": K.dim, "rho": rho, "draws": count,
                                                     "accepted": sample.accepted, "mass": measure.total_mass,
                                                     "stderr": stderr, "seed": seed})
    return measure


def _family(K: ConvexBody, count: int, seed: int, box, settings: Settings) -> MeasureFamily:
    n = K.dim
    radii, a = extraction_coefficients(n, settings)
    sample = sample_parallel_shell(K, radii[-1], count, seed, box=box, settings=settings)
    cell = sample.box_volume / count
    shells = (sample.distances[:, None] <= np.array(radii)[None, :]).astype(float)
    contributions = cell * shells @ a.T
    locations = np.hstack([sample.feet, sample.directions])

    measures = []
    stderrs = []
    for i in range(n):
        g = contributions[:, i] * count
        # Rejected draws contribute zeros to the per-draw sample.
        s1, s2 = g.sum(), (g ** 2).sum()
        var = max(s2 / count - (s1 / count) ** 2, 0.0) * count / max(count - 1, 1)
        stderr = math.sqrt(var / count)
        stderrs.append(stderr)
        measures.append(DiscreteMeasure(SpaceTag.SIGMA, n, locations, contributions[:, i], signed=True,
                                        stderr=stderr, label=f"Lambda_{i}"))

    family = MeasureFamily(body=K, measures=measures, sample_count=count, seed=seed, radii=radii,
                           stderrs=tuple(stderrs), box_volume=sample.box_volume,
                           metadata={"sampler": "box", "accepted": sample.accepted})
    low = family.check_masses(settings.mass_tolerance)
    if low:
        logger.warning("Extracted measure with negative mass", extra={"indices": low, "masses": family.masses()})
    logger.info("Extracted support measures", extra={"kind": K.kind.value, "dim": n, "draws": count,
                                                     "accepted": sample.accepted, "masses": family.masses(),
                                                     "stderrs": stderrs, "seed": seed})
    return family


def _ray_family(K: ConvexBody, count: int, seed: int, settings: Settings) -> MeasureFamily:
    """
    Randomized ray quadrature of the same signed combination.

    Rays leave a point c of K along rotated sphere nets. Along a ray the distance
    to K grows monotonically, so the crossings of the levels 0 < ρ_1 < … < ρ_n cut
    it into n panels on which Σ_{ρ_j >= d} a[i, j] is constant. Each panel gets
    Gauss-Legendre nodes weighted by r^{n-1} dr · ω_n/rays. Every replicate net is
    an unbiased estimate on its own; their spread gives the standard errors.
    """
    n = K.dim
    consts = dimension_constants(n)
    radii, a = extraction_coefficients(n, settings)
    steps = np.cumsum(a[:, ::-1], axis=1)[:, ::-1]
    nodes, node_weights = np.polynomial.legendre.leggauss(settings.ray_nodes)
    replicates = settings.ray_replicates
    per_net = max(1, count // (n * settings.ray_nodes * replicates))
    directions, labels = rotated_nets(n, per_net, replicates, seed)
    rays = directions.shape[0]
    origin = interior_point(K, settings)
    levels = np.concatenate([[0.0], radii])
    panel = np.repeat(np.arange(n), settings.ray_nodes)
    cell = consts.omega[n] / rays

    parts = []
    for start in range(0, rays, settings.block_size):
        theta = directions[start:start + settings.block_size]
        crossings = ray_crossings(K, origin, theta, levels, settings)
        mid = 0.5 * (crossings[:, 1:] + crossings[:, :-1])
        half = 0.5 * (crossings[:, 1:] - crossings[:, :-1])
        R = (mid[:, :, None] + half[:, :, None] * nodes[None, None, :]).reshape(theta.shape[0], -1)
        W = (half[:, :, None] * node_weights[None, None, :]).reshape(theta.shape[0], -1) * R ** (n - 1) * cell
        X = origin + (R[:, :, None] * theta[:, None, :]).reshape(-1, n)
        P, D, U = project_many(K, X, settings)
        weights = W.reshape(-1)
        keep = (D > 0) & (weights > 0)
        contributions = weights[:, None] * steps[:, np.tile(panel, theta.shape[0])].T
        owner = np.repeat(labels[start:start + theta.shape[0]], panel.size)
        parts.append((np.hstack([P, U])[keep], contributions[keep], owner[keep]))
    locations, contributions, owner = (np.concatenate(cols) for cols in zip(*parts))

    per_replicate = np.stack([np.bincount(owner, weights=contributions[:, i], minlength=replicates)
                              for i in range(n)], axis=1) * replicates
    stderrs = per_replicate.std(axis=0, ddof=1) / math.sqrt(replicates)
    measures = [DiscreteMeasure(SpaceTag.SIGMA, n, locations, contributions[:, i], signed=True,
                                stderr=float(stderrs[i]), label=f"Lambda_{i}") for i in range(n)]
    family = MeasureFamily(body=K, measures=measures, sample_count=count, seed=seed, radii=radii,
                           stderrs=tuple(float(s) for s in stderrs),
                           metadata={"sampler": "rays", "rays": rays, "per_net": per_net,
                                     "replicates": replicates, "nodes": settings.ray_nodes})
    low = family.check_masses(settings.mass_tolerance)
    if low:
        logger.warning("Extracted measure with negative mass", extra={"indices": low, "masses": family.masses()})
    logger.info("Extracted support measures", extra={"kind": K.kind.value, "dim": n, "sampler": "rays",
                                                     "rays": rays, "masses": family.masses(),
                                                     "stderrs": family.stderrs, "seed": seed})
    return family


def extract_support_measures(K: ConvexBody, count: int, seed: int,
                             box: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                             settings: Settings = DEFAULT_SETTINGS) -> MeasureFamily:
    """
    Λ_0 … Λ_{n-1} of K from one sample of the box of K_1.

    Every draw at distance d from K lies in the shells of all radii ρ_j >= d, so it
    yields one atom whose weight for Λ_i is (box_volume/count)·Σ_{ρ_j >= d} a[i, j].
    Weights are signed. With ``settings.sampler == "rays"`` the ray quadrature is
    used instead and ``box`` is ignored.
    """
    if count < K.dim:
        raise ValueError(f"need at least {K.dim} draws")
    if settings.sampler == "rays":
        return _ray_family(K, count, seed, settings)
    return _family(K, count, seed, box, settings)


def extract_support_measures_pair(K: ConvexBody, L: ConvexBody, count: int, seed: int,
                                  settings: Settings = DEFAULT_SETTINGS) -> Tuple[MeasureFamily, MeasureFamily]:
    """Both families from the same draws over one shared box (common random numbers)."""
    box = common_box(K, L, 1.0, settings)
    return (extract_support_measures(K, count, seed, box=box, settings=settings),
            extract_support_measures(L, count, seed, box=box, settings=settings))


def polytope_support_measure_exact(P: ConvexBody, i: int, mesh: float = 0.1,
                                   settings: Settings = DEFAULT_SETTINGS) -> DiscreteMeasure:
    """
    Λ_i of a polytope: each i-face F contributes vol_i(F)·γ(F, P), spread uniformly
    over F times the unit vectors of its normal cone.
    """
    if P.outer_radius:
        raise ValueError("exact oracle needs a polytope without outer radius")
    n = P.dim
    if not 0 <= i <= n - 1:
        raise ValueError(f"index must be in 0..{n - 1}")
    lattice = FaceLattice(P, settings)
    blocks, weights = [], []
    for face in lattice.faces_of_dim(i):
        mass = face.volume * face.external_angle
        if mass <= 0:
            continue
        X = lattice.face_points(face, mesh)
        U = lattice.normal_directions(face, mesh)
        blocks.append(np.hstack([np.repeat(X, U.shape[0], axis=0), np.tile(U, (X.shape[0], 1))]))
        weights.append(np.full(X.shape[0] * U.shape[0], mass / (X.shape[0] * U.shape[0])))
    if not blocks:
        return DiscreteMeasure.empty(SpaceTag.SIGMA, n)
    return DiscreteMeasure(SpaceTag.SIGMA, n, np.vstack(blocks), np.concatenate(weights), label=f"Lambda_{i}")


def _ball_radius(B: ConvexBody) -> float:
    if B.kind is not BodyKind.BALL:
        raise ValueError(f"exact ball oracle needs a ball, got {B.kind.value}")
    return B.radius + B.outer_radius


def ball_support_measure_exact(B: ConvexBody, i: int, mesh: float = 0.1,
                               directions: Optional[np.ndarray] = None) -> DiscreteMeasure:
    """
    Atoms (c + r·u_k, u_k) on a sphere net, each weighing V_i(B)/|net|.

    ``directions`` replaces the net by given unit vectors, e.g. the rays of a ray
    extraction, so that both measures sit on the same atoms.
    """
    n = B.dim
    if not 0 <= i <= n - 1:
        raise ValueError(f"index must be in 0..{n - 1}")
    r = _ball_radius(B)
    consts = dimension_constants(n)
    if directions is None:
        count = 2 if n == 1 else max(8, int(math.ceil(consts.omega[n] / mesh ** (n - 1))))
        U = sphere_net(n, count)
    else:
        U = np.atleast_2d(np.asarray(directions, dtype=float))
        if U.shape[1] != n:
            raise ValueError(f"directions must have {n} columns")
    mass = consts.ball_intrinsic_volume(i, r)
    locations = np.hstack([B.center + r * U, U])
    return DiscreteMeasure(SpaceTag.SIGMA, n, locations, np.full(U.shape[0], mass / U.shape[0]), label=f"Lambda_{i}")


SPHERE_CONVENTIONS = ("psi", "area", "surface")


def sphere_marginal(measure: DiscreteMeasure, i: int, n: int, convention: str = "psi") -> DiscreteMeasure:
    """
    Push a Σ^n measure to the sphere by dropping positions.

    ``psi`` keeps weights (Ψ_i); ``area`` scales by n·κ_{n-i}/C(n, i), the area
    measure S_i normalised so that S_{n-1} is surface area; ``surface`` is the
    factor 2 that turns Λ_{n-1} into S_{n-1}.
    """
    if measure.space is not SpaceTag.SIGMA:
        raise ValueError("marginal needs a Σ^n measure")
    if convention == "psi":
        factor = 1.0
    elif convention == "area":
        factor = n * dimension_constants(n).kappa[n - i] / math.comb(n, i)
    elif convention == "surface":
        if i != n - 1:
            raise ValueError("the surface convention applies to i = n-1 only")
        factor = 2.0
    else:
        raise ValueError(f"unknown convention {convention!r}; use one of {SPHERE_CONVENTIONS}")
    stderr = None if measure.stderr is None else factor * measure.stderr
    return DiscreteMeasure(SpaceTag.SPHERE, n, measure.directions, measure.weights * factor,
                           signed=measure.signed, stderr=stderr, label=measure.label)


# -- independent oracles and diagnostics ---------------------------------------

def intrinsic_volumes_exact(K: ConvexBody, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """V_0 … V_n of a ball or polytope, including the outer radius."""
    n = K.dim
    consts = dimension_constants(n)
    if K.kind is BodyKind.BALL:
        return np.array([consts.ball_intrinsic_volume(j, K.radius + K.outer_radius) for j in range(n + 1)])
    if K.kind not in (BodyKind.VPOLYTOPE, BodyKind.HPOLYTOPE):
        raise ValueError(f"no exact intrinsic volumes for {K.kind.value}")
    core = FaceLattice(K, settings).intrinsic_volumes()
    rho = K.outer_radius
    if rho == 0:
        return core
    out = np.zeros(n + 1)
    for j in range(n + 1):
        for i in range(j + 1):
            out[j] += math.comb(n - i, n - j) * consts.kappa[n - i] / consts.kappa[n - j] * rho ** (j - i) * core[i]
    return out


@dataclass(frozen=True)
class SteinerFit:
    values: np.ndarray
    stderrs: np.ndarray
    radii: Tuple[float, ...]


def steiner_intrinsic_volumes(K: ConvexBody, count: int, seed: int,
                              settings: Settings = DEFAULT_SETTINGS) -> SteinerFit:
    """
    V_0 … V_n by least squares on Monte-Carlo volumes of K_ρ at ρ = 0.5, 1, …, (n+1)/2.

    The radii differ from the extraction radii, which keeps this an independent check.
    """
    n = K.dim
    consts = dimension_constants(n)
    radii = tuple(0.5 * k for k in range(1, n + 2))
    lo, hi = bounding_box(K, radii[-1], settings)
    box_volume = float(np.prod(hi - lo))
    counts = np.zeros(len(radii))
    for X in box_draws(lo, hi, count, seed, settings.block_size):
        d = project_many(K, X, settings)[1]
        counts += (d[:, None] <= np.array(radii)[None, :]).sum(axis=0)
    p = counts / count
    volumes = box_volume * p
    A = np.array([[consts.kappa[n - j] * rho ** (n - j) for j in range(n + 1)] for rho in radii])
    pinv = np.linalg.pinv(A)
    values = pinv @ volumes
    nested = np.minimum.outer(p, p) - np.outer(p, p)
    cov = box_volume ** 2 * nested / count
    stderrs = np.sqrt(np.clip(np.diag(pinv @ cov @ pinv.T), 0.0, None))
    logger.info("Steiner fit", extra={"kind": K.kind.value, "dim": n, "draws": count, "values": values,
                                      "stderrs": stderrs, "seed": seed})
    return SteinerFit(values, stderrs, radii)


@dataclass(frozen=True)
class NormalBundleReport:
    atoms: int
    failures: Tuple[int, ...]
    max_support_gap: float
    max_distance: float

    @property
    def ok(self) -> bool:
        return not self.failures


def certify_normal_bundle(K: ConvexBody, measure: DiscreteMeasure, tolerance: Optional[float] = None,
                          settings: Settings = DEFAULT_SETTINGS) -> NormalBundleReport:
    """Check |h_K(u) - x·u| and d_K(x) for every atom (x, u)."""
    tolerance = settings.normal_bundle_tolerance if tolerance is None else tolerance
    if len(measure) == 0:
        return NormalBundleReport(0, (), 0.0, 0.0)
    X, U = measure.positions, measure.directions
    h = support_bracket(K, U, settings).hi
    gap = np.abs(h - np.einsum("ij,ij->i", X, U))
    dist = project_many(K, X, settings)[1]
    bad = np.flatnonzero((gap > tolerance) | (dist > tolerance))
    report = NormalBundleReport(len(measure), tuple(int(k) for k in bad), float(gap.max()), float(dist.max()))
    if bad.size:
        logger.warning("Atoms off the normal bundle", extra={"failures": int(bad.size), "atoms": len(measure),
                                                             "max_support_gap": report.max_support_gap,
                                                             "max_distance": report.max_distance})
    return report


@dataclass(frozen=True)
class NegativeCell:
    cell: Tuple[int, ...]
    mass: float
    stderr: float


def negativity_diagnostic(measure: DiscreteMeasure, cell: float, sigmas: float = 3.0) -> List[NegativeCell]:
    """
    Grid cells whose net weight is negative beyond ``sigmas`` standard errors.

    Each atom comes from one independent draw, so a cell's variance is estimated
    by the sum of its squared weights.
    """
    if len(measure) == 0 or not measure.signed:
        return []
    keys = np.floor(measure.locations / cell).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    net = np.bincount(inverse, weights=measure.weights, minlength=len(uniq))
    spread = np.sqrt(np.bincount(inverse, weights=measure.weights ** 2, minlength=len(uniq)))
    flagged = np.flatnonzero(net < -sigmas * spread)
    result = [NegativeCell(tuple(int(v) for v in uniq[k]), float(net[k]), float(spread[k])) for k in flagged]
    if result:
        logger.warning("Significantly negative cells", extra={"cells": len(result), "label": measure.label,
                                                              "worst": min(c.mass for c in result)})
    return result
