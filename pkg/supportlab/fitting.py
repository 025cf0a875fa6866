"""Log-log exponent fits along shrinking ladders."""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    points: int

    @property
    def usable(self) -> bool:
        return self.points >= 2 and np.isfinite(self.slope)


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """
    Weighted least squares of log y on log x.

    The point with the smallest x counts twice. Pairs with a non-positive
    coordinate carry no information on a log scale and are skipped.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or np.ptp(np.log(x)) == 0.0:
        return SlopeFit(float("nan"), float("nan"), int(x.size))
    weights = np.ones_like(x)
    weights[np.argmin(x)] = 2.0
    # polyfit weights multiply residuals, not squared residuals.
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1, w=np.sqrt(weights))
    logger.debug("Fitted slope", extra={"slope": float(slope), "points": int(x.size)})
    return SlopeFit(float(slope), float(intercept), int(x.size))
