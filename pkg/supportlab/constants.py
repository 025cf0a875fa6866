"""Dimension constants: volumes of unit balls and surface areas of unit spheres."""
from dataclasses import dataclass
from functools import lru_cache
from math import comb, gamma, pi
from typing import Tuple

MAX_DIMENSION = 6


@dataclass(frozen=True)
class DimensionConstants:
    """κ_0…κ_n and ω_0…ω_n for one ambient dimension.

    ``kappa[j]`` is the volume of the unit j-ball and ``omega[k] = k * kappa[k]``
    the surface area of the unit (k-1)-sphere; ``omega[0]`` is 0.
    """

    n: int
    kappa: Tuple[float, ...]
    omega: Tuple[float, ...]

    def ball_intrinsic_volume(self, i: int, radius: float = 1.0) -> float:
        """V_i of an n-ball of the given radius."""
        return comb(self.n, i) * self.kappa[self.n] / self.kappa[self.n - i] * radius ** i


def unit_ball_volume(j: int) -> float:
    return pi ** (j / 2.0) / gamma(j / 2.0 + 1.0)


@lru_cache(maxsize=None)
def dimension_constants(n: int) -> DimensionConstants:
    if n < 1 or n > MAX_DIMENSION:
        raise ValueError(f"dimension must be in 1..{MAX_DIMENSION}, got {n}")
    # Recurrence κ_j = κ_{j-2}·2π/j keeps κ_0 = 1 and κ_1 = 2 exact.
    kappa = [1.0, 2.0]
    for j in range(2, n + 1):
        kappa.append(kappa[j - 2] * 2.0 * pi / j)
    kappa = kappa[: n + 1]
    omega = tuple(k * kappa[k] for k in range(n + 1))
    return DimensionConstants(n=n, kappa=tuple(kappa), omega=omega)
