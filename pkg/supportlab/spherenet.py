"""Deterministic point nets on unit spheres S^{d-1} ⊂ R^d."""
import logging
from typing import Tuple

import numpy as np
from scipy.stats import norm, qmc, special_ortho_group

logger = logging.getLogger(__name__)


def golden_points(count: int) -> np.ndarray:
    """Golden section spiral on S^2, shape (count, 3)."""
    inc = np.pi * (3.0 - np.sqrt(5.0))
    off = 2.0 / count
    k = np.arange(count)
    phi = k * inc
    y = k * off - 1.0 + off / 2.0
    r = np.sqrt(np.clip(1.0 - y ** 2, 0.0, None))
    return np.column_stack([np.cos(phi) * r, y, np.sin(phi) * r])


def sobol_sphere_points(d: int, count: int, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol points pushed to S^{d-1} through the Gaussian quantile map."""
    sampler = qmc.Sobol(d=d, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    z = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sphere_net(d: int, count: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic low-discrepancy net on the unit sphere of R^d.

    Args:
        d: ambient dimension of the sphere's linear span (d >= 1)
        count: requested number of points; S^0 always has exactly two
        seed: scrambling seed, only used for d >= 4

    Returns:
        Array of shape (m, d) of unit vectors
    """
    if d < 1:
        raise ValueError("sphere dimension must be at least 1")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    count = max(int(count), 1)
    if d == 2:
        angles = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if d == 3:
        return golden_points(count)
    return sobol_sphere_points(d, count, seed=seed)


def random_unit_vectors(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    z = rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def rotated_nets(d: int, count: int, replicates: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``replicates`` copies of ``sphere_net(d, count)``, each under its own Haar-random
    rotation drawn from ``seed``.

    Returns the stacked unit vectors and, per row, the index of its copy.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    rng = np.random.default_rng(seed)
    net = sphere_net(d, count, seed=seed)
    blocks = []
    for _ in range(replicates):
        if d == 1:
            rotation = np.array([[rng.choice([-1.0, 1.0])]])
        else:
            rotation = special_ortho_group.rvs(d, random_state=rng)
        blocks.append(net @ rotation.T)
    return np.vstack(blocks), np.repeat(np.arange(replicates), net.shape[0])
