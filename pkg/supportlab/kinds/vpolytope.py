"""V-polytopes: convex hulls of finitely many points, possibly lower dimensional."""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from supportlab.config import Settings
from supportlab.errors import ConvergenceFailure, FaceEnumerationOverflow, InvalidBody
from supportlab.kinds.base import KindStrategy, SupportValues
from supportlab.kinds.flats import enumerate_flats, project_by_flats

logger = logging.getLogger(__name__)

AFFINE_RANK_TOLERANCE = 1e-12


def affine_frame(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Origin and orthonormal basis (rows) of the affine hull of ``points``."""
    origin = points.mean(axis=0)
    centered = points - origin
    if points.shape[0] == 1:
        return origin, np.zeros((0, points.shape[1]))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(s[0]) if s.size else 1.0)
    rank = int(np.sum(s > AFFINE_RANK_TOLERANCE * scale))
    return origin, vt[:rank]


def reduce_vertices(points: np.ndarray) -> np.ndarray:
    """Drop duplicates and points that are not hull vertices; rows come back sorted."""
    points = np.unique(points, axis=0)
    origin, basis = affine_frame(points)
    rank = basis.shape[0]
    if rank == 0:
        return points[:1]
    coords = (points - origin) @ basis.T
    if rank == 1:
        keep = np.array(sorted({int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))}))
        return points[keep]
    try:
        hull = ConvexHull(coords)
    except QhullError as e:
        logger.warning("Hull reduction failed, keeping all points", extra={"error": str(e), "count": points.shape[0]})
        return points
    return points[np.sort(hull.vertices)]


def min_norm_point(P: np.ndarray, tol: float = 1e-12, max_iter: int = 1000) -> Tuple[np.ndarray, np.ndarray]:
    """
    Wolfe's active-set method for the point of conv(P) nearest the origin.

    Returns the point and its convex-combination weights over the rows of P.
    """
    m = P.shape[0]
    norms = np.einsum("ij,ij->i", P, P)
    scale = max(float(norms.max()), 1.0)
    S = [int(np.argmin(norms))]
    lam = np.array([1.0])
    x = P[S[0]].copy()

    for _ in range(max_iter):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        for _minor in range(max_iter):
            Q = P[S]
            k = len(S)
            system = np.zeros((k + 1, k + 1))
            system[:k, :k] = Q @ Q.T
            system[:k, k] = 1.0
            system[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(system, rhs, rcond=None)[0][:k]
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            neg = alpha <= 1e-14
            denom = lam[neg] - alpha[neg]
            ratios = np.where(denom > 0, lam[neg] / np.where(denom > 0, denom, 1.0), 0.0)
            theta = min(1.0, float(ratios.min()))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > 1e-14
            S = [s for s, kept in zip(S, keep) if kept]
            lam = lam[keep] / lam[keep].sum()
        else:
            raise ConvergenceFailure("min-norm-point minor cycle did not terminate")
        x = lam @ P[S]
    else:
        raise ConvergenceFailure("min-norm-point did not terminate")

    weights = np.zeros(m)
    weights[S] = lam
    return x, weights


class VPolytopeKind(KindStrategy):
    name = "vpolytope"

    def validate(self, body) -> None:
        if body.vertices.shape[0] > 64:
            raise InvalidBody(f"V-polytope has {body.vertices.shape[0]} vertices; the cap is 64")

    def vertices(self, body) -> np.ndarray:
        return body.vertices

    def far_radius(self, body) -> float:
        return float(np.max(np.linalg.norm(body.vertices, axis=1)))

    def support(self, body, U: np.ndarray, settings: Settings) -> SupportValues:
        values = U @ body.vertices.T
        best = np.argmax(values, axis=1)
        h = values[np.arange(U.shape[0]), best]
        return SupportValues(h, h, body.vertices[best])

    def facets(self, body) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Outer unit normals and offsets when the polytope is full dimensional."""
        if "facets" in body.cache:
            return body.cache["facets"]
        result = None
        if body.vertices.shape[0] > body.dim and affine_frame(body.vertices)[1].shape[0] == body.dim:
            try:
                hull = ConvexHull(body.vertices)
                eq = np.unique(np.round(hull.equations, 12), axis=0)
                result = (eq[:, :-1] / np.linalg.norm(eq[:, :-1], axis=1)[:, None],
                          -eq[:, -1] / np.linalg.norm(eq[:, :-1], axis=1))
            except QhullError:
                result = None
        body.cache["facets"] = result
        return result

    def _flats(self, body, settings: Settings):
        if "flats" not in body.cache:
            facets = self.facets(body)
            flats = None
            if facets is not None:
                normals, offsets = facets
                tight = np.abs(body.vertices @ normals.T - offsets) <= 1e-8
                incidence = [tuple(np.flatnonzero(row)) for row in tight]
                try:
                    flats = enumerate_flats(normals, offsets, incidence=incidence, max_count=settings.max_faces)
                except FaceEnumerationOverflow:
                    flats = None
            body.cache["flats"] = flats
        return body.cache["flats"]

    def project(self, body, X: np.ndarray, settings: Settings) -> np.ndarray:
        V = body.vertices
        if V.shape[0] == 1:
            return np.repeat(V, X.shape[0], axis=0)
        P = np.empty_like(X)
        todo = np.arange(X.shape[0])
        if settings.projector in ("auto", "faces"):
            flats = self._flats(body, settings)
            if flats is not None:
                normals, offsets = self.facets(body)
                P, missing = project_by_flats(X, flats, normals, offsets, tol=settings.feasibility_tolerance)
                todo = np.flatnonzero(missing)
        for k in todo:
            p, _ = min_norm_point(V - X[k])
            P[k] = X[k] + p
        return P
