"""H-polytopes: bounded intersections of halfspaces a·x <= b with unit normals a."""
import logging

import numpy as np
from scipy.optimize import linprog

from supportlab.config import Settings
from supportlab.errors import FaceEnumerationOverflow, InvalidBody
from supportlab.kinds.base import KindStrategy, SupportValues
from supportlab.kinds.flats import dykstra_project, enumerate_flats, polytope_vertices, project_by_flats

logger = logging.getLogger(__name__)


class HPolytopeKind(KindStrategy):
    name = "hpolytope"

    def validate(self, body) -> None:
        n = body.dim
        for k in range(n):
            for sign in (1.0, -1.0):
                c = np.zeros(n)
                c[k] = -sign
                res = linprog(c, A_ub=body.normals, b_ub=body.offsets, bounds=[(None, None)] * n, method="highs")
                if res.status == 2:
                    raise InvalidBody("halfspaces have an empty intersection")
                if res.status == 3:
                    raise InvalidBody(f"H-polytope is unbounded in direction {'+' if sign > 0 else '-'}e{k + 1}")
                if res.status != 0:
                    raise InvalidBody(f"boundedness check failed: {res.message}")
        if self.vertices(body).shape[0] == 0:
            raise InvalidBody("H-polytope has no vertices")

    def vertices(self, body) -> np.ndarray:
        if "vertices" not in body.cache:
            vertices, incidence = polytope_vertices(body.normals, body.offsets, max_count=10 ** 6)
            body.cache["vertices"] = vertices
            body.cache["incidence"] = incidence
        return body.cache["vertices"]

    def far_radius(self, body) -> float:
        return float(np.max(np.linalg.norm(self.vertices(body), axis=1)))

    def support(self, body, U: np.ndarray, settings: Settings) -> SupportValues:
        V = self.vertices(body)
        values = U @ V.T
        best = np.argmax(values, axis=1)
        h = values[np.arange(U.shape[0]), best]
        return SupportValues(h, h, V[best])

    def _flats(self, body, settings: Settings):
        if "flats" not in body.cache:
            self.vertices(body)
            try:
                body.cache["flats"] = enumerate_flats(body.normals, body.offsets, incidence=body.cache["incidence"],
                                                      max_count=settings.max_faces)
            except FaceEnumerationOverflow as e:
                logger.info("Falling back to Dykstra", extra={"reason": str(e)})
                body.cache["flats"] = None
        return body.cache["flats"]

    def project(self, body, X: np.ndarray, settings: Settings) -> np.ndarray:
        if settings.projector != "dykstra":
            flats = self._flats(body, settings)
            if flats is not None:
                P, missing = project_by_flats(X, flats, body.normals, body.offsets, tol=settings.feasibility_tolerance)
                if np.any(missing):
                    P[missing] = dykstra_project(X[missing], body.normals, body.offsets,
                                                 tol=settings.projection_tolerance, max_sweeps=settings.max_sweeps)
                return P
        return dykstra_project(X, body.normals, body.offsets, tol=settings.projection_tolerance,
                               max_sweeps=settings.max_sweeps)
