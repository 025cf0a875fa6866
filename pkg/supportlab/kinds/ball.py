import numpy as np

from supportlab.config import Settings
from supportlab.kinds.base import KindStrategy, SupportValues


class BallKind(KindStrategy):
    name = "ball"

    def validate(self, body) -> None:
        pass

    def far_radius(self, body) -> float:
        return float(np.linalg.norm(body.center)) + body.radius

    def support(self, body, U: np.ndarray, settings: Settings) -> SupportValues:
        h = U @ body.center + body.radius
        return SupportValues(h, h, body.center + body.radius * U)

    def project(self, body, X: np.ndarray, settings: Settings) -> np.ndarray:
        D = X - body.center
        norms = np.linalg.norm(D, axis=1)
        outside = norms > body.radius
        P = np.array(X, dtype=float, copy=True)
        P[outside] = body.center + D[outside] * (body.radius / norms[outside])[:, None]
        return P
