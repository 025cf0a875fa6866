"""
Support functions, metric projection, Hausdorff distance and shell sampling.

All operations treat a body's ``outer_radius`` in closed form: for K_ρ = K + ρB,
h_{K_ρ}(u) = h_K(u) + ρ, and the foot point on K_ρ lies on the segment from the
foot point on K towards x.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from supportlab.config import DEFAULT_SETTINGS, Settings
from supportlab.errors import DegenerateShell, NonUnitDirection, ResolutionNotMet
from supportlab.kinds import SupportValues, strategy_for
from supportlab.models.body import BodyKind, ConvexBody

logger = logging.getLogger(__name__)

POLYTOPE_KINDS = (BodyKind.VPOLYTOPE, BodyKind.HPOLYTOPE)


@dataclass(frozen=True)
class ProjectionResult:
    """Foot point p, distance d and direction u (None when x lies in K)."""

    p: np.ndarray
    d: float
    u: Optional[np.ndarray]


@dataclass(frozen=True)
class HausdorffBracket:
    lo: float
    hi: float
    method: str
    evaluations: int = 0

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ShellSample:
    """Accepted draws of a rejection sample from a bounding box of K_ρ."""

    points: np.ndarray
    feet: np.ndarray
    directions: np.ndarray
    distances: np.ndarray
    draws: int
    box_lo: np.ndarray
    box_hi: np.ndarray

    @property
    def accepted(self) -> int:
        return int(self.distances.shape[0])

    @property
    def box_volume(self) -> float:
        return float(np.prod(self.box_hi - self.box_lo))

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.draws if self.draws else 0.0


def _directions(K: ConvexBody, U, settings: Settings) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] != K.dim:
        raise NonUnitDirection(f"direction has dimension {U.shape[1]}, body has {K.dim}")
    if np.any(np.abs(np.linalg.norm(U, axis=1) - 1.0) > settings.unit_tolerance):
        raise NonUnitDirection("direction is not a unit vector")
    return U


def support_bracket(K: ConvexBody, U, settings: Settings = DEFAULT_SETTINGS) -> SupportValues:
    """Certified bracket of h_K over the rows of U, with support points of K."""
    U = _directions(K, U, settings)
    core = strategy_for(K.kind).support(K, U, settings)
    if K.outer_radius == 0:
        return core
    rho = K.outer_radius
    return SupportValues(core.lo + rho, core.hi + rho, core.points + rho * U)


def support_many(K: ConvexBody, U, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    return support_bracket(K, U, settings).hi


def support_function(K: ConvexBody, u, settings: Settings = DEFAULT_SETTINGS) -> float:
    """h_K(u) = max_{x in K} x·u; the upper end of the bracket when it is not exact."""
    return float(support_bracket(K, u, settings).hi[0])


def project_many(K: ConvexBody, X, settings: Settings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Foot points, distances and directions for the rows of X.

    Directions are NaN rows where the distance is 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != K.dim:
        raise ValueError(f"points have dimension {X.shape[1]}, body has {K.dim}")
    P0 = strategy_for(K.kind).project(K, X, settings)
    diff = X - P0
    d0 = np.linalg.norm(diff, axis=1)
    rho = K.outer_radius
    outside = d0 > rho
    P = np.array(X, copy=True)
    U = np.full_like(X, np.nan)
    if np.any(outside):
        u = diff[outside] / d0[outside, None]
        U[outside] = u
        P[outside] = P0[outside] + rho * u if rho > 0 else P0[outside]
    D = np.maximum(d0 - rho, 0.0)
    return P, D, U


def project(K: ConvexBody, x, settings: Settings = DEFAULT_SETTINGS) -> ProjectionResult:
    P, D, U = project_many(K, np.asarray(x, dtype=float)[None, :], settings)
    d = float(D[0])
    return ProjectionResult(P[0], d, U[0] if d > 0 else None)


def distance_many(K: ConvexBody, X, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    return project_many(K, X, settings)[1]


def circumradius_bound(K: ConvexBody) -> float:
    """Radius of an origin-centred ball containing K + 2B^n (not the minimal one)."""
    return strategy_for(K.kind).far_radius(K) + K.outer_radius + 2.0


def bounding_box(K: ConvexBody, rho: float = 0.0, settings: Settings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box of K_ρ from the support function in the 2n axis directions."""
    axes = np.vstack([np.eye(K.dim), -np.eye(K.dim)])
    h = support_bracket(K, axes, settings).hi
    pad = rho + settings.box_inflation
    return -h[K.dim:] - pad, h[:K.dim] + pad


def common_box(K: ConvexBody, L: ConvexBody, rho: float,
               settings: Settings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    lo_k, hi_k = bounding_box(K, rho, settings)
    lo_l, hi_l = bounding_box(L, rho, settings)
    return np.minimum(lo_k, lo_l), np.maximum(hi_k, hi_l)


def box_draws(box_lo: np.ndarray, box_hi: np.ndarray, count: int, seed: int,
              block_size: int) -> Iterator[np.ndarray]:
    """
    Uniform box points in fixed-size blocks, one spawned substream per block, so the
    draws depend only on (seed, count, block_size).
    """
    blocks = (count + block_size - 1) // block_size
    children = np.random.SeedSequence(seed).spawn(blocks)
    for b, child in enumerate(children):
        size = min(block_size, count - b * block_size)
        rng = np.random.default_rng(child)
        yield box_lo + (box_hi - box_lo) * rng.random((size, box_lo.shape[0]))


def parallel_shell_sample(K: ConvexBody, rho: float, rng: np.random.Generator,
                          settings: Settings = DEFAULT_SETTINGS, max_draws: int = 1_000_000) -> np.ndarray:
    """One point uniformly distributed in K_ρ \\ K, by rejection from the box of K_ρ."""
    if rho <= 0:
        raise ValueError("shell radius must be positive")
    lo, hi = bounding_box(K, rho, settings)
    for _ in range(max_draws):
        x = lo + (hi - lo) * rng.random(K.dim)
        d = distance_many(K, x[None, :], settings)[0]
        if 0 < d <= rho:
            return x
    raise DegenerateShell(f"no shell point in {max_draws} draws")


def sample_parallel_shell(K: ConvexBody, rho: float, count: int, seed: int,
                          box: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                          settings: Settings = DEFAULT_SETTINGS) -> ShellSample:
    """
    Draw ``count`` box points and keep those with 0 < d_K(x) <= ρ.

    ``box`` defaults to the bounding box of K_ρ; a shared box gives common random
    numbers across bodies.
    """
    if rho <= 0:
        raise ValueError("shell radius must be positive")
    if count < 1:
        raise ValueError("sample count must be at least 1")
    lo, hi = box if box is not None else bounding_box(K, rho, settings)
    parts = []
    for X in box_draws(lo, hi, count, seed, settings.block_size):
        P, D, U = project_many(K, X, settings)
        keep = (D > 0) & (D <= rho)
        parts.append((X[keep], P[keep], U[keep], D[keep]))
    points, feet, directions, distances = (np.concatenate(cols) for cols in zip(*parts))
    sample = ShellSample(points, feet, directions, distances, count, lo, hi)
    logger.debug("Sampled parallel shell", extra={"kind": K.kind.value, "dim": K.dim, "rho": rho,
                                                  "draws": count, "accepted": sample.accepted, "seed": seed})
    if sample.accepted == 0:
        logger.error("Empty shell sample", extra={"kind": K.kind.value, "rho": rho, "draws": count,
                                                  "error_type": "DegenerateShell"})
        raise DegenerateShell(f"no accepted draws out of {count} for rho={rho}")
    return sample


RAY_BISECTIONS = 60


def interior_point(K: ConvexBody, settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """Mean of the support points in the 2n axis directions: a point of K, the centre for a ball."""
    axes = np.vstack([np.eye(K.dim), -np.eye(K.dim)])
    return support_bracket(K, axes, settings).points.mean(axis=0)


def ray_crossings(K: ConvexBody, origin: np.ndarray, directions: np.ndarray, levels,
                  settings: Settings = DEFAULT_SETTINGS) -> np.ndarray:
    """
    Radii r at which d_K(origin + r·θ) first exceeds each level, shape (rays, levels).

    ``origin`` must lie in K. The distance is convex and zero at r = 0 along such a
    ray, hence non-decreasing, and each crossing is found by bisection.
    """
    levels = np.asarray(levels, dtype=float)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    count, width = directions.shape[0], levels.size
    reach = float(np.linalg.norm(origin)) + circumradius_bound(K) + float(levels.max())
    lo = np.zeros((count, width))
    hi = np.full((count, width), reach)
    for _ in range(RAY_BISECTIONS):
        mid = 0.5 * (lo + hi)
        X = origin + (mid[:, :, None] * directions[:, None, :]).reshape(-1, K.dim)
        above = distance_many(K, X, settings).reshape(count, width) > levels[None, :]
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return hi


# -- Hausdorff distance -----------------------------------------------------

def _same_core(K: ConvexBody, L: ConvexBody) -> bool:
    if K.kind is not L.kind or K.dim != L.dim or K.radius != L.radius:
        return False
    for name in ("vertices", "normals", "offsets", "center"):
        a, b = getattr(K, name), getattr(L, name)
        if (a is None) != (b is None) or (a is not None and (a.shape != b.shape or not np.array_equal(a, b))):
            return False
    return True


def _vertex_hausdorff(K: ConvexBody, L: ConvexBody, settings: Settings) -> float:
    core_k, core_l = K.with_outer_radius(0.0), L.with_outer_radius(0.0)
    vk = strategy_for(K.kind).vertices(K)
    vl = strategy_for(L.kind).vertices(L)
    return float(max(distance_many(core_l, vk, settings).max(), distance_many(core_k, vl, settings).max()))


def _embed(axis: np.ndarray, sign: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Points of the cube face {z_axis = sign} with free coordinates a."""
    m, k = a.shape
    rows = np.arange(m)
    free = np.arange(k)[None, :]
    cols = free + (free >= axis[:, None])
    Z = np.empty((m, k + 1))
    Z[rows[:, None], cols] = a
    Z[rows, axis] = sign
    return Z


def _cell_bounds(K, L, axis, sign, lo, hi, corners, settings):
    m, k = lo.shape
    n = k + 1
    centers = _embed(axis, sign, (lo + hi) / 2.0)
    u0 = centers / np.linalg.norm(centers, axis=1)[:, None]
    sk = support_bracket(K, u0, settings)
    sl = support_bracket(L, u0, settings)
    cell_lo = np.maximum.reduce([sk.lo - sl.hi, sl.lo - sk.hi, np.zeros(m)])

    a = lo[:, None, :] + (hi - lo)[:, None, :] * corners[None, :, :]
    Z = np.stack([_embed(axis, sign, a[:, c, :]) for c in range(corners.shape[0])], axis=1)
    norms = np.linalg.norm(Z, axis=2)
    flat = (Z / norms[..., None]).reshape(-1, n)
    hk = support_bracket(K, flat, settings).hi.reshape(norms.shape) * norms
    hl = support_bracket(L, flat, settings).hi.reshape(norms.shape) * norms
    phi = np.max(hk - np.einsum("mcn,mn->mc", Z, sl.points), axis=1)
    psi = np.max(hl - np.einsum("mcn,mn->mc", Z, sk.points), axis=1)
    nearest = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(lo ** 2, hi ** 2))
    min_norm = np.sqrt(1.0 + nearest.sum(axis=1))
    ub = np.maximum.reduce([phi, psi, np.zeros(m)]) / min_norm
    return cell_lo, np.maximum(ub, cell_lo)


def _branch_and_bound(K: ConvexBody, L: ConvexBody, resolution: float, settings: Settings) -> HausdorffBracket:
    n = K.dim
    if n == 1:
        U = np.array([[1.0], [-1.0]])
        sk, sl = support_bracket(K, U, settings), support_bracket(L, U, settings)
        lo = float(np.max(np.maximum(sk.lo - sl.hi, sl.lo - sk.hi)))
        hi = float(np.max(np.maximum(sk.hi - sl.lo, sl.hi - sk.lo)))
        return HausdorffBracket(max(lo, 0.0), max(hi, 0.0), "branch-and-bound", 4)

    corners = np.array(list(itertools.product((0.0, 1.0), repeat=n - 1)))
    halves = np.array(list(itertools.product((0, 1), repeat=n - 1)))
    axis = np.repeat(np.arange(n), 2)
    sign = np.tile([1.0, -1.0], n)
    lo = -np.ones((2 * n, n - 1))
    hi = np.ones((2 * n, n - 1))

    best_lo = 0.0
    settled_hi = 0.0
    evaluations = 0
    while lo.shape[0]:
        evaluations += lo.shape[0]
        if evaluations > settings.hausdorff_budget:
            ub_now = max(settled_hi, best_lo)
            logger.error("Hausdorff bracket budget exhausted", extra={"evaluations": evaluations, "lo": best_lo,
                                                                     "error_type": "ResolutionNotMet"})
            raise ResolutionNotMet(f"bracket [{best_lo:.3e}, >={ub_now:.3e}] not within {resolution:.1e} "
                                   f"after {evaluations} cells")
        cell_lo, ub = _cell_bounds(K, L, axis, sign, lo, hi, corners, settings)
        best_lo = max(best_lo, float(cell_lo.max()))
        refine = ub > best_lo + resolution
        if np.any(~refine):
            settled_hi = max(settled_hi, float(ub[~refine].max()))
        axis, sign, lo, hi = axis[refine], sign[refine], lo[refine], hi[refine]
        if lo.shape[0] == 0:
            break
        if np.min(hi - lo) < 1e-13:
            raise ResolutionNotMet("cells shrank below floating point resolution")
        mid = (lo + hi) / 2.0
        child_lo = np.where(halves[None, :, :] == 0, lo[:, None, :], mid[:, None, :]).reshape(-1, n - 1)
        child_hi = np.where(halves[None, :, :] == 0, mid[:, None, :], hi[:, None, :]).reshape(-1, n - 1)
        count = halves.shape[0]
        axis, sign = np.repeat(axis, count), np.repeat(sign, count)
        lo, hi = child_lo, child_hi

    return HausdorffBracket(best_lo, max(settled_hi, best_lo), "branch-and-bound", evaluations)


def hausdorff_bracket(K: ConvexBody, L: ConvexBody, settings: Settings = DEFAULT_SETTINGS) -> HausdorffBracket:
    """
    Certified bracket of d_H(K, L) = max_u |h_K(u) - h_L(u)|.

    Polytope pairs with equal outer radius and pairs of balls are exact; everything
    else goes through branch-and-bound over cube-sphere cells, where convexity of
    the support functions bounds each cell from the support values at its corners.
    """
    if K.dim != L.dim:
        raise ValueError("bodies live in different dimensions")
    if _same_core(K, L):
        value = abs(K.outer_radius - L.outer_radius)
        bracket = HausdorffBracket(value, value, "exact-parallel")
    elif K.kind in POLYTOPE_KINDS and L.kind in POLYTOPE_KINDS and K.outer_radius == L.outer_radius:
        value = _vertex_hausdorff(K, L, settings)
        bracket = HausdorffBracket(value, value, "exact-vertex")
    elif K.kind is BodyKind.BALL and L.kind is BodyKind.BALL:
        value = float(np.linalg.norm(K.center - L.center)
                      + abs(K.radius + K.outer_radius - L.radius - L.outer_radius))
        bracket = HausdorffBracket(value, value, "exact-ball")
    else:
        k_reach = strategy_for(K.kind).far_radius(K) + K.outer_radius
        l_reach = strategy_for(L.kind).far_radius(L) + L.outer_radius
        scale = max(1.0, k_reach, l_reach)
        bracket = _branch_and_bound(K, L, settings.hausdorff_resolution * scale, settings)
    logger.debug("Hausdorff bracket", extra={"lo": bracket.lo, "hi": bracket.hi, "method": bracket.method,
                                             "evaluations": bracket.evaluations})
    return bracket


def hausdorff_distance(K: ConvexBody, L: ConvexBody, settings: Settings = DEFAULT_SETTINGS) -> float:
    """The conservative (upper) end of the certified bracket."""
    return hausdorff_bracket(K, L, settings).hi
