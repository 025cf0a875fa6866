from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from supportlab.config import Settings

if TYPE_CHECKING:
    from supportlab.models.body import ConvexBody


@dataclass(frozen=True)
class SupportValues:
    """h(u) bracket [lo, hi] per direction with a support point attaining lo."""

    lo: np.ndarray
    hi: np.ndarray
    points: np.ndarray

    @property
    def exact(self) -> bool:
        return bool(np.all(self.lo == self.hi))


class KindStrategy(ABC):
    """Per-kind geometry of the core body (outer radius excluded)."""

    name: str = ""

    @abstractmethod
    def validate(self, body: "ConvexBody") -> None:
        ...

    @abstractmethod
    def support(self, body: "ConvexBody", U: np.ndarray, settings: Settings) -> SupportValues:
        ...

    @abstractmethod
    def project(self, body: "ConvexBody", X: np.ndarray, settings: Settings) -> np.ndarray:
        ...

    @abstractmethod
    def far_radius(self, body: "ConvexBody") -> float:
        """Upper bound of |x| over the core body."""

    def vertices(self, body: "ConvexBody") -> Optional[np.ndarray]:
        return None
