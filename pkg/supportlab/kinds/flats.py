"""
Exact projection and support by face enumeration, plus Dykstra's projector.

A body cut out by halfspaces (optionally intersected with a ball) is handled through
its "flats": the affine subspaces F_S = {x : a_k·x = b_k, k in S} for independent
active sets S that actually touch the body. The nearest point of the body to x is
the nearest *feasible* candidate among the projections of x onto F_S ∩ B, and the
maximiser of u·x is the best feasible maximiser over the same pieces.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from supportlab.errors import ConvergenceFailure, FaceEnumerationOverflow

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Flat:
    active: Tuple[int, ...]
    a: np.ndarray
    b: np.ndarray
    pinv: np.ndarray
    origin: np.ndarray
    direction_projector: np.ndarray
    ball_radius: float

    def project(self, X: np.ndarray) -> np.ndarray:
        if not self.active:
            return X.copy()
        return X - (X @ self.a.T - self.b) @ self.pinv.T


def _make_flat(active, normals, offsets, reference, radius) -> Optional[Flat]:
    n = normals.shape[1]
    if not active:
        return Flat((), np.zeros((0, n)), np.zeros(0), np.zeros((n, 0)), reference.copy(),
                    np.eye(n), radius if radius is not None else np.inf)
    a = normals[list(active)]
    b = offsets[list(active)]
    if np.linalg.matrix_rank(a, tol=RANK_TOLERANCE) < len(active):
        return None
    pinv = np.linalg.pinv(a)
    origin = reference - pinv @ (a @ reference - b)
    ball_radius = np.inf
    if radius is not None:
        r2 = radius ** 2 - float(np.sum((origin - reference) ** 2))
        if r2 < -1e-12:
            return None
        ball_radius = float(np.sqrt(max(r2, 0.0)))
    return Flat(tuple(active), a, b, pinv, origin, np.eye(n) - pinv @ a, ball_radius)


def polytope_vertices(normals: np.ndarray, offsets: np.ndarray, max_count: int,
                      tol: float = 1e-9) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """
    Vertices of {x : A x <= b} by solving every n-subset of constraints.

    Returns the deduplicated vertices and, per vertex, the indices of the
    constraints tight there.
    """
    m, n = normals.shape
    combos = list(itertools.combinations(range(m), n)) if m >= n else []
    if len(combos) > max_count:
        raise FaceEnumerationOverflow(f"{len(combos)} constraint subsets exceed the cap {max_count}")
    if not combos:
        return np.zeros((0, n)), []
    idx = np.array(combos)
    mats = normals[idx]
    rhs = offsets[idx]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-12
    if not np.any(ok):
        return np.zeros((0, n)), []
    points = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(points @ normals.T <= offsets + tol, axis=1)
    points = points[feasible]
    if points.shape[0] == 0:
        return np.zeros((0, n)), []
    keys = np.round(points / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    vertices = points[np.sort(first)]
    tight = np.abs(vertices @ normals.T - offsets) <= tol * 10
    incidence = [tuple(np.flatnonzero(row)) for row in tight]
    return vertices, incidence


def enumerate_flats(normals: np.ndarray, offsets: np.ndarray, center: Optional[np.ndarray] = None,
                    radius: Optional[float] = None, incidence: Optional[Sequence[Tuple[int, ...]]] = None,
                    max_count: int = 20_000) -> List[Flat]:
    """
    Independent active sets S whose flat meets the body, found level by level.

    With a ball, S survives while F_S still meets the ball; without one, S must be
    contained in the tight set of some vertex (``incidence``).
    """
    n = normals.shape[1]
    reference = center if center is not None else np.zeros(n)
    root = _make_flat((), normals, offsets, reference, radius)
    flats = [root]
    frontier = [root]
    vertex_sets = [frozenset(s) for s in incidence] if incidence is not None else None
    m = normals.shape[0]

    for _level in range(n):
        next_frontier = []
        for parent in frontier:
            start = parent.active[-1] + 1 if parent.active else 0
            for j in range(start, m):
                active = parent.active + (j,)
                if vertex_sets is not None and not any(set(active) <= vs for vs in vertex_sets):
                    continue
                flat = _make_flat(active, normals, offsets, reference, radius)
                if flat is None:
                    continue
                next_frontier.append(flat)
                if len(flats) + len(next_frontier) > max_count:
                    raise FaceEnumerationOverflow(f"more than {max_count} faces")
        flats.extend(next_frontier)
        frontier = next_frontier
        if not frontier:
            break

    logger.debug("Enumerated flats", extra={"count": len(flats), "constraints": m, "dim": n})
    return flats


def _feasible(Y, normals, offsets, center, radius, tol):
    ok = np.all(Y @ normals.T <= offsets + tol, axis=1) if normals.shape[0] else np.ones(Y.shape[0], bool)
    if center is not None:
        ok &= np.linalg.norm(Y - center, axis=1) <= radius + tol
    return ok


def _clip_to_flat_ball(Y: np.ndarray, flat: Flat) -> np.ndarray:
    if not np.isfinite(flat.ball_radius):
        return Y
    D = Y - flat.origin
    norms = np.linalg.norm(D, axis=1)
    outside = norms > flat.ball_radius
    if np.any(outside):
        Y = Y.copy()
        Y[outside] = flat.origin + D[outside] * (flat.ball_radius / norms[outside])[:, None]
    return Y


def project_by_flats(X: np.ndarray, flats: Sequence[Flat], normals: np.ndarray, offsets: np.ndarray,
                     center: Optional[np.ndarray] = None, radius: Optional[float] = None,
                     tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest feasible candidate per row; the mask flags rows with no feasible candidate."""
    best = np.full(X.shape[0], np.inf)
    P = np.array(X, dtype=float, copy=True)
    for flat in flats:
        Y = _clip_to_flat_ball(flat.project(X), flat)
        dist = np.sum((X - Y) ** 2, axis=1)
        better = (dist < best) & _feasible(Y, normals, offsets, center, radius, tol)
        if np.any(better):
            P[better] = Y[better]
            best[better] = dist[better]
    return P, ~np.isfinite(best)


def support_by_flats(U: np.ndarray, flats: Sequence[Flat], normals: np.ndarray, offsets: np.ndarray,
                     center: np.ndarray, radius: float, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Exact h(u) and a maximiser for a ball cut."""
    best = np.full(U.shape[0], -np.inf)
    points = np.zeros_like(U)
    for flat in flats:
        G = U @ flat.direction_projector
        gn = np.linalg.norm(G, axis=1)
        step = np.where(gn > 1e-15, flat.ball_radius / np.where(gn > 1e-15, gn, 1.0), 0.0)
        Y = flat.origin + G * step[:, None]
        values = np.einsum("ij,ij->i", U, Y)
        better = (values > best) & _feasible(Y, normals, offsets, center, radius, tol)
        if np.any(better):
            points[better] = Y[better]
            best[better] = values[better]
    return best, points


def dykstra_project(X: np.ndarray, normals: np.ndarray, offsets: np.ndarray,
                    center: Optional[np.ndarray] = None, radius: Optional[float] = None,
                    tol: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """
    Dykstra's alternating projections onto the halfspaces (and the ball), batched
    over the rows of X. Rows stop once a full sweep moves them by at most ``tol``.
    """
    Z = np.array(X, dtype=float, copy=True)
    m = normals.shape[0]
    n_sets = m + (1 if center is not None else 0)
    active = np.arange(Z.shape[0])
    incs = np.zeros((n_sets,) + Z.shape)

    for sweep in range(max_sweeps):
        if active.size == 0:
            return Z
        Zs = Z[active]
        start = Zs.copy()
        for k in range(n_sets):
            Y = Zs + incs[k, active]
            if k < m:
                excess = Y @ normals[k] - offsets[k]
                new = Y - np.maximum(excess, 0.0)[:, None] * normals[k]
            else:
                D = Y - center
                norms = np.linalg.norm(D, axis=1)
                scale = np.minimum(1.0, radius / np.where(norms > 0, norms, 1.0))
                new = center + D * scale[:, None]
            incs[k, active] = Y - new
            Zs = new
        Z[active] = Zs
        moved = np.max(np.abs(Zs - start), axis=1)
        active = active[moved > tol]

    if active.size:
        logger.error("Dykstra did not converge", extra={"rows": int(active.size), "max_sweeps": max_sweeps})
        raise ConvergenceFailure(f"Dykstra projection exceeded {max_sweeps} sweeps for {active.size} points")
    return Z
