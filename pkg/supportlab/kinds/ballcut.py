"""Balls intersected with finitely many halfspaces (the cap-cut bodies among them)."""
import logging

import numpy as np

from supportlab.config import DEFAULT_SETTINGS, Settings
from supportlab.errors import ConvergenceFailure, FaceEnumerationOverflow, InvalidBody
from supportlab.kinds.base import KindStrategy, SupportValues
from supportlab.kinds.flats import dykstra_project, enumerate_flats, project_by_flats, support_by_flats

logger = logging.getLogger(__name__)

# Far points for the projection-based support bracket sit at this multiple of (r + 1).
FAR_FACTOR = 100.0


class BallCutKind(KindStrategy):
    name = "ballcut"

    def validate(self, body) -> None:
        c = body.center[None, :]
        try:
            p = self.project(body, c, DEFAULT_SETTINGS)
        except ConvergenceFailure as e:
            raise InvalidBody(f"ball cut appears to be empty: {e}") from e
        slack = 1e-7
        if np.linalg.norm(p[0] - body.center) > body.radius + slack or np.any(body.normals @ p[0] > body.offsets + slack):
            raise InvalidBody("ball cut is empty")

    def far_radius(self, body) -> float:
        return float(np.linalg.norm(body.center)) + body.radius

    def _flats(self, body, settings: Settings):
        if "flats" not in body.cache:
            try:
                body.cache["flats"] = enumerate_flats(body.normals, body.offsets, center=body.center,
                                                      radius=body.radius, max_count=settings.max_faces)
            except FaceEnumerationOverflow as e:
                logger.info("Falling back to Dykstra", extra={"reason": str(e)})
                body.cache["flats"] = None
        return body.cache["flats"]

    def _dykstra(self, body, X, settings: Settings):
        return dykstra_project(X, body.normals, body.offsets, center=body.center, radius=body.radius,
                               tol=settings.projection_tolerance, max_sweeps=settings.max_sweeps)

    def project(self, body, X: np.ndarray, settings: Settings) -> np.ndarray:
        if settings.projector != "dykstra":
            flats = self._flats(body, settings)
            if flats is not None:
                P, missing = project_by_flats(X, flats, body.normals, body.offsets, body.center, body.radius,
                                              tol=settings.feasibility_tolerance)
                if np.any(missing):
                    P[missing] = self._dykstra(body, X[missing], settings)
                return P
        return self._dykstra(body, X, settings)

    def support(self, body, U: np.ndarray, settings: Settings) -> SupportValues:
        c, r = body.center, body.radius
        q = c + r * U
        inside = np.all(q @ body.normals.T <= body.offsets + 1e-12, axis=1) if body.normals.shape[0] else np.ones(U.shape[0], bool)
        lo = U @ c + r
        hi = lo.copy()
        points = q.copy()
        rest = np.flatnonzero(~inside)
        if rest.size == 0:
            return SupportValues(lo, hi, points)

        flats = self._flats(body, settings) if settings.projector != "dykstra" else None
        if flats is not None:
            h, pts = support_by_flats(U[rest], flats, body.normals, body.offsets, c, r,
                                      tol=settings.feasibility_tolerance)
            lo[rest] = h
            hi[rest] = h
            points[rest] = pts
            return SupportValues(lo, hi, points)

        # The projection p_T of a far point c + T u is the support point for u_T; convexity
        # of h then bounds h(u) by h(u_T) + R|u - u_T| from above and u·p_T from below.
        T = FAR_FACTOR * (r + 1.0)
        far = c + T * U[rest]
        p = self._dykstra(body, far, settings)
        d = far - p
        u_t = d / np.linalg.norm(d, axis=1)[:, None]
        lo[rest] = np.einsum("ij,ij->i", U[rest], p)
        hi[rest] = (np.einsum("ij,ij->i", u_t, p) + self.far_radius(body) * np.linalg.norm(U[rest] - u_t, axis=1)
                    + settings.projection_tolerance)
        points[rest] = p
        return SupportValues(lo, hi, points)
