"""
Cap-cut balls: the family showing that the exponent 1/2 of the Hölder bound for
support measures cannot be improved.

E is the span of the first i+1 coordinates, B_E the unit ball of E and S_E its
unit sphere. N caps of geodesic radius h centred at e_1 … e_N ∈ S_E are sliced off
B_E by the halfspaces z·e_j <= cos h. The test function f_h is a tent over each
cap's normal bundle; pairing it with Ψ_i of the cut and the uncut ball gives a gap
of order N·h^i ≍ 1 while d_H = 1 - cos h ≍ h² and ‖f_h‖_L ≍ 1/h.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.linalg import null_space

from supportlab.batch_runner import BatchJob, BatchRunner
from supportlab.config import DEFAULT_SETTINGS, Settings
from supportlab.constants import dimension_constants
from supportlab.errors import InequalityViolation, QuadratureFailure, QuadratureMismatch
from supportlab.fitting import SlopeFit, fit_slope
from supportlab.models.body import ConvexBody
from supportlab.models.measure import DiscreteMeasure, SpaceTag
from supportlab.spherenet import random_unit_vectors, sphere_net

logger = logging.getLogger(__name__)

TIGHTNESS_COLUMNS = ("n", "i", "h", "N", "gap_analytic", "lip_measured", "lower_bound", "dH_bound",
                     "dbl_empirical", "mc_stderr")
PACKING_NET_MAX = 200_000
LIPSCHITZ_PAIRS = 20_000
HEMISPHERE_LEVELS = 2
TIGHTNESS_SOURCES = ("quadrature", "extracted")


@dataclass(frozen=True, eq=False)
class CapConstruction:
    n: int
    i: int
    h: float
    basis: np.ndarray
    centers: np.ndarray

    @property
    def count(self) -> int:
        return int(self.centers.shape[0])

    @property
    def packing_constant(self) -> float:
        """N·h^i, bounded above and below independently of h."""
        return self.count * self.h ** self.i

    def min_separation(self) -> float:
        if self.count < 2:
            return math.pi
        cosines = np.clip(self.centers @ self.centers.T, -1.0, 1.0)
        np.fill_diagonal(cosines, -1.0)
        return float(np.arccos(cosines.max()))


def _check_indices(n: int, i: int, h: float) -> None:
    if not 1 <= i <= n - 1:
        raise ValueError(f"index i must be in 1..{n - 1}, got {i}")
    if not 0.0 < h < math.pi / 2:
        raise ValueError(f"cap radius must be in (0, π/2), got {h}")


def _greedy_packing(d: int, h: float) -> np.ndarray:
    count = int(min(PACKING_NET_MAX, max(2000, 40 * (2.0 / h) ** (d - 1))))
    net = sphere_net(d, count, seed=0)
    chosen = [0]
    nearest = np.arccos(np.clip(net @ net[0], -1.0, 1.0))
    while True:
        k = int(np.argmax(nearest))
        if nearest[k] < 2.0 * h:
            break
        chosen.append(k)
        nearest = np.minimum(nearest, np.arccos(np.clip(net @ net[k], -1.0, 1.0)))
    return net[chosen]


def build_cap_packing(n: int, i: int, h: float) -> CapConstruction:
    """
    Cap centres on S_E at pairwise geodesic distance >= 2h.

    On the circle (i = 1) the floor(π/h) centres are equally spaced; otherwise a
    greedy farthest-point packing of a sphere net is used.
    """
    _check_indices(n, i, h)
    d = i + 1
    if i == 1:
        count = int(math.floor(math.pi / h))
        angles = 2.0 * math.pi * np.arange(count) / count
        local = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        local = _greedy_packing(d, h)
    basis = np.eye(n)[:d]
    construction = CapConstruction(n=n, i=i, h=h, basis=basis, centers=local @ basis)
    logger.info("Built cap packing", extra={"n": n, "i": i, "h": h, "caps": construction.count,
                                            "packing_constant": construction.packing_constant,
                                            "min_separation": construction.min_separation()})
    return construction


def subspace_ball(n: int, i: int) -> ConvexBody:
    """B_E: the unit ball of R^n cut down to E by the pairs z_k <= 0, -z_k <= 0 for k > i+1."""
    if i == n - 1:
        return ConvexBody.ball(np.zeros(n), 1.0, label="B_E")
    rest = np.eye(n)[i + 1:]
    normals = np.vstack([rest, -rest])
    return ConvexBody.ballcut(np.zeros(n), 1.0, normals, np.zeros(normals.shape[0]), label="B_E")


def cap_cut_body(construction: CapConstruction) -> ConvexBody:
    c = construction
    body = subspace_ball(c.n, c.i).with_halfspaces(c.centers, np.full(c.count, math.cos(c.h)))
    return body.relabeled(f"B_E(h={c.h:g})")


def eval_f(construction: CapConstruction, U) -> np.ndarray:
    """
    f_h at unit vectors U (shape (m, n) or (n,)).

    For the nearest centre e (ties to the lowest index) and y = π_E(u), the value
    |y| - |y - (u·e)e|/sin h inside the cap's range (angle of y to e at most h), else 0.
    """
    c = construction
    U = np.atleast_2d(np.asarray(U, dtype=float))
    y = U @ c.basis.T @ c.basis
    dots = U @ c.centers.T
    j = np.argmax(dots, axis=1)
    along = dots[np.arange(U.shape[0]), j]
    radial = np.linalg.norm(y, axis=1)
    across = np.linalg.norm(y - along[:, None] * c.centers[j], axis=1)
    inside = (radial > 0) & (along >= radial * math.cos(c.h) - 1e-15)
    values = np.where(inside, radial - across / math.sin(c.h), 0.0)
    return np.clip(values, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """f_h bound to its construction."""

    __test__ = False

    construction: CapConstruction

    def __call__(self, U) -> np.ndarray:
        return eval_f(self.construction, U)

    def measured_lipschitz(self, rng: np.random.Generator, pairs: int = LIPSCHITZ_PAIRS) -> float:
        """
        Largest |f(a) - f(b)|/|a - b| over random pairs.

        Half the pairs are uniform on the sphere; the other half are short pairs
        scattered around randomly chosen cap centres, where the slope lives.
        """
        c = self.construction
        n = c.n
        half = max(pairs // 2, 1)
        A = random_unit_vectors(rng, half, n)
        B = random_unit_vectors(rng, half, n)
        centers = c.centers[rng.integers(0, c.count, size=half)]
        near = centers + 1.5 * c.h * rng.standard_normal((half, n)) / math.sqrt(n)
        near /= np.linalg.norm(near, axis=1, keepdims=True)
        step = near + (0.2 * c.h * rng.random(half))[:, None] * random_unit_vectors(rng, half, n)
        step /= np.linalg.norm(step, axis=1, keepdims=True)
        A, B = np.vstack([A, near]), np.vstack([B, step])
        dist = np.linalg.norm(A - B, axis=1)
        keep = dist > 1e-12
        ratios = np.abs(self(A[keep]) - self(B[keep])) / dist[keep]
        lip = float(ratios.max()) if ratios.size else 0.0
        logger.debug("Measured Lipschitz constant", extra={"h": c.h, "lipschitz": lip, "c4": lip * c.h,
                                                           "pairs": int(keep.sum())})
        return lip


def _quad(func, a: float, b: float, settings: Settings) -> float:
    result = integrate.quad(func, a, b, epsabs=settings.quadrature_tolerance,
                            epsrel=settings.quadrature_tolerance, limit=200, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 or abserr > 10 * settings.quadrature_tolerance:
        message = result[3] if len(result) > 3 else f"error estimate {abserr:.1e}"
        logger.error("Quadrature failed", extra={"interval": [a, b], "error": message,
                                                 "error_type": "QuadratureFailure"})
        raise QuadratureFailure(f"quadrature on [{a}, {b}] did not converge: {message}")
    return float(value)


def _cap_pairing_quadrature(construction: CapConstruction, settings: Settings) -> float:
    """∫ f dΨ_i(B_E(e, h)) by integrating over the normal bundle ν(e) in the (s, w) chart."""
    n, i, h = construction.n, construction.i, construction.h
    consts = dimension_constants(n)
    e = construction.centers[0]
    prefactor = consts.kappa[i] * math.sin(h) ** i / consts.omega[n - i]
    if i == n - 1:
        return prefactor * float(eval_f(construction, e)[0])
    w = np.eye(n)[i + 1]
    k = n - i - 2

    def integrand(s):
        u = math.cos(s) * e + math.sin(s) * w
        return float(eval_f(construction, u)[0]) * math.sin(s) ** k

    return prefactor * consts.omega[n - i - 1] * _quad(integrand, 0.0, math.pi / 2, settings)


def psi_cap_pairing(n: int, i: int, h: float, check: bool = True,
                    settings: Settings = DEFAULT_SETTINGS) -> float:
    """
    ∫ f dΨ_i(B_E(e, h)) = κ_i κ_{n-i-1} / ω_{n-i} · sin^i h.

    With ``check`` the value is cross-checked against quadrature of f over ν(e).
    """
    _check_indices(n, i, h)
    consts = dimension_constants(n)
    value = consts.kappa[i] * consts.kappa[n - i - 1] / consts.omega[n - i] * math.sin(h) ** i
    if check:
        construction = CapConstruction(n, i, h, np.eye(n)[:i + 1], np.eye(n)[:1])
        quadrature = _cap_pairing_quadrature(construction, settings)
        if abs(quadrature - value) > settings.quadrature_mismatch:
            logger.error("Cap pairing mismatch", extra={"n": n, "i": i, "h": h, "closed_form": value,
                                                        "quadrature": quadrature,
                                                        "error_type": "QuadratureMismatch"})
            raise QuadratureMismatch(f"closed form {value!r} vs quadrature {quadrature!r} for n={n}, i={i}, h={h}")
    return value


@dataclass(frozen=True)
class BallPairing:
    value: float
    leading: float
    coefficient: float


def ball_leading_coefficient(n: int, i: int) -> float:
    """κ_i κ_{n-i-1}/ω_{n-i} - ω_i κ_{n-i-1}/((i+1) ω_{n-i})."""
    c = dimension_constants(n)
    return (c.kappa[i] * c.kappa[n - i - 1] - c.omega[i] * c.kappa[n - i - 1] / (i + 1)) / c.omega[n - i]


def gap_coefficient(n: int, i: int) -> float:
    """ω_i κ_{n-i-1}/((i+1) ω_{n-i}), the per-cap gap divided by h^i as h -> 0."""
    c = dimension_constants(n)
    return c.omega[i] * c.kappa[n - i - 1] / ((i + 1) * c.omega[n - i])


def psi_ball_pairing(n: int, i: int, h: float, settings: Settings = DEFAULT_SETTINGS) -> BallPairing:
    """∫ f dΨ_i(B_E) by one-dimensional quadrature, with its leading-order value."""
    _check_indices(n, i, h)
    c = dimension_constants(n)
    prefactor = c.omega[i] * c.kappa[n - i - 1] / c.omega[n - i]
    lower = _quad(lambda t: math.sin(t) ** (i - 1), 0.0, h, settings)
    upper = _quad(lambda t: math.sin(t) ** i, 0.0, h, settings)
    coefficient = ball_leading_coefficient(n, i)
    return BallPairing(value=prefactor * (lower - upper / math.sin(h)), leading=coefficient * h ** i,
                       coefficient=coefficient)


def leading_coefficient_estimate(n: int, i: int, h: float, settings: Settings = DEFAULT_SETTINGS) -> float:
    """Richardson extrapolation of psi_ball_pairing/h^i from h and h/2 (the error is even in h)."""
    r_h = psi_ball_pairing(n, i, h, settings).value / h ** i
    r_half = psi_ball_pairing(n, i, h / 2, settings).value / (h / 2) ** i
    return (4.0 * r_half - r_h) / 3.0


# -- cap quadrature ------------------------------------------------------------

def _normal_hemisphere(n: int, i: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Midpoint rule on the hemisphere {cos s·b + sin s·v : v ∈ S(E^⊥), 0 <= s <= π/2}
    of unit normals around a base direction b ∈ E.

    Returns cos s, sin s and v per node, and weights summing to ω_{n-i}/2.
    """
    consts = dimension_constants(n)
    d = n - i - 1
    if d == 0:
        return np.ones(1), np.zeros(1), np.zeros((1, n)), np.ones(1)
    V = sphere_net(d, 2 * d) @ np.eye(n)[i + 1:]
    s = (np.arange(HEMISPHERE_LEVELS) + 0.5) * math.pi / (2 * HEMISPHERE_LEVELS)
    density = np.repeat(np.sin(s) ** (d - 1), V.shape[0])
    weights = density * (0.5 * consts.omega[n - i] / density.sum())
    return (np.repeat(np.cos(s), V.shape[0]), np.repeat(np.sin(s), V.shape[0]),
            np.tile(V, (HEMISPHERE_LEVELS, 1)), weights)


def _with_normals(bases: np.ndarray, positions: np.ndarray, weights: np.ndarray, n: int,
                  i: int) -> Tuple[np.ndarray, np.ndarray]:
    """Σ^n rows [x, u] for every base direction and hemisphere node, with their weights."""
    cos_s, sin_s, V, hemi = _normal_hemisphere(n, i)
    U = cos_s[None, :, None] * bases[:, None, :] + sin_s[None, :, None] * V[None, :, :]
    X = np.broadcast_to(positions[:, None, :], U.shape)
    rows = np.concatenate([X, U], axis=2).reshape(-1, 2 * n)
    return rows, (weights[:, None] * hemi[None, :] / dimension_constants(n).omega[n - i]).reshape(-1)


def cap_quadrature_measures(construction: CapConstruction,
                            settings: Settings = DEFAULT_SETTINGS) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """
    Quadrature of Ψ_i(B_E(h)) and Ψ_i(B_E) over the normal bundles of the caps.

    Away from the caps both measures coincide, so the returned pair has the same
    difference as the full measures. Per cap centre e the cut face is one position
    cos h·e carrying κ_i sin^i h; the part of S_E it removes is 2i positions at the
    mean geodesic radius r̄ from e in ± tangent directions, each carrying A_i(h)/(2i)
    with A_i(h) = ω_i ∫_0^h sin^{i-1}. Every position spreads its mass over the
    hemisphere rule around its normal in E.
    """
    c = construction
    n, i, h = c.n, c.i, c.h
    consts = dimension_constants(n)
    mass = _quad(lambda r: math.sin(r) ** (i - 1), 0.0, h, settings)
    r_bar = _quad(lambda r: r * math.sin(r) ** (i - 1), 0.0, h, settings) / mass
    area = consts.omega[i] * mass

    local = c.centers @ c.basis.T
    tangents = np.vstack([null_space(row[None, :]).T @ c.basis for row in local])
    tangents = np.vstack([tangents, -tangents]).reshape(2, c.count, i, n).transpose(1, 0, 2, 3).reshape(-1, n)
    ring_centers = np.repeat(c.centers, 2 * i, axis=0)
    ring = math.cos(r_bar) * ring_centers + math.sin(r_bar) * tangents
    ring /= np.linalg.norm(ring, axis=1, keepdims=True)

    face_rows, face_weights = _with_normals(c.centers, math.cos(h) * c.centers,
                                            np.full(c.count, consts.kappa[i] * math.sin(h) ** i), n, i)
    ring_rows, ring_weights = _with_normals(ring, ring, np.full(ring.shape[0], area / (2 * i)), n, i)
    cut = DiscreteMeasure(SpaceTag.SIGMA, n, face_rows, face_weights, label=f"Psi_{i} cut faces")
    full = DiscreteMeasure(SpaceTag.SIGMA, n, ring_rows, ring_weights, label=f"Psi_{i} cap rings")
    logger.debug("Cap quadrature", extra={"n": n, "i": i, "h": h, "caps": c.count, "r_bar": r_bar,
                                          "face_atoms": len(cut), "ring_atoms": len(full)})
    return cut, full


# -- tightness -----------------------------------------------------------------

@dataclass(frozen=True)
class TightnessRow:
    n: int
    i: int
    h: float
    N: int
    gap_analytic: float
    lip_measured: float
    lower_bound: float
    dH_bound: float
    dbl_empirical: float
    mc_stderr: float
    coarsening_bound: float = 0.0
    dH_lo: Optional[float] = None

    def as_row(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k in TIGHTNESS_COLUMNS}

    @property
    def dominated(self) -> bool:
        """
        Whether the distance clears the analytic lower bound within 3σ.

        Coarsening can raise or lower the computed distance by up to its bound, so the
        bound is taken off before comparing.
        """
        return self.dbl_empirical - self.coarsening_bound >= self.lower_bound - 3.0 * self.mc_stderr


@dataclass
class TightnessReport:
    rows: List[TightnessRow]
    fit: SlopeFit
    metadata: dict = field(default_factory=dict)

    def violations(self) -> List[TightnessRow]:
        return [r for r in self.rows if not r.dominated]


def _quadrature_distance(construction: CapConstruction, certify: bool, settings: Settings):
    from supportlab.measures import certify_normal_bundle, sphere_marginal
    from supportlab.metric import bounded_lipschitz_distance

    n, i = construction.n, construction.i
    cut_caps, full_caps = cap_quadrature_measures(construction, settings)
    if certify:
        for body, measure in ((cap_cut_body(construction), cut_caps), (subspace_ball(n, i), full_caps)):
            bundle = certify_normal_bundle(body, measure, settings=settings)
            if not bundle.ok:
                logger.error("Quadrature atoms off the normal bundle",
                             extra={"h": construction.h, "body": body.label, "failures": len(bundle.failures),
                                    "max_support_gap": bundle.max_support_gap,
                                    "error_type": "QuadratureMismatch"})
                raise QuadratureMismatch(f"{len(bundle.failures)} quadrature atoms off the normal bundle "
                                         f"of {body.label}")
    return bounded_lipschitz_distance(sphere_marginal(cut_caps, i, n), sphere_marginal(full_caps, i, n),
                                      settings=settings), 0.0


def _extracted_distance(construction: CapConstruction, samples: int, seed: int, grid: float, settings: Settings):
    from supportlab.measures import extract_support_measures_pair, sphere_marginal
    from supportlab.metric import bounded_lipschitz_distance

    n, i = construction.n, construction.i
    fam_cut, fam_full = extract_support_measures_pair(cap_cut_body(construction), subspace_ball(n, i),
                                                      samples, seed, settings)
    result = bounded_lipschitz_distance(sphere_marginal(fam_cut[i], i, n), sphere_marginal(fam_full[i], i, n),
                                        grid=grid, settings=settings)
    return result, math.hypot(fam_cut.stderrs[i], fam_full.stderrs[i])


def _tightness_point(n: int, i: int, h: float, samples: int, seed: int, grid: float, certify: bool,
                     source: str, settings: Settings) -> TightnessRow:
    from supportlab.geometry import hausdorff_bracket

    construction = build_cap_packing(n, i, h)
    f = TestFunction(construction)
    gap = construction.count * (psi_cap_pairing(n, i, h, settings=settings)
                                - psi_ball_pairing(n, i, h, settings).value)
    lip = f.measured_lipschitz(np.random.default_rng(seed))
    lower = gap / max(1.0, lip)

    dh_bound = 1.0 - math.cos(h)
    dh_lo = None
    if certify:
        bracket = hausdorff_bracket(cap_cut_body(construction), subspace_ball(n, i), settings)
        dh_lo = bracket.lo
        if bracket.lo > dh_bound + settings.feasibility_tolerance:
            logger.error("Hausdorff bound violated", extra={"h": h, "lo": bracket.lo, "bound": dh_bound,
                                                            "error_type": "InequalityViolation"})
            raise InequalityViolation(f"d_H lower end {bracket.lo!r} exceeds 1 - cos h = {dh_bound!r}")

    if source == "quadrature":
        result, stderr = _quadrature_distance(construction, certify, settings)
    else:
        result, stderr = _extracted_distance(construction, samples, seed, grid, settings)
    row = TightnessRow(n=n, i=i, h=h, N=construction.count, gap_analytic=gap, lip_measured=lip,
                       lower_bound=lower, dH_bound=dh_bound, dbl_empirical=result.value, mc_stderr=stderr,
                       coarsening_bound=result.coarsening_bound, dH_lo=dh_lo)
    logger.info("Tightness grid point", extra={"n": n, "i": i, "h": h, "caps": construction.count,
                                               "gap": gap, "lipschitz": lip, "c4": lip * h, "lower_bound": lower,
                                               "dbl": result.value, "stderr": stderr, "source": source})
    return row


def tightness_report(n: int, i: int, h_grid: Sequence[float], samples: int = 20_000, seed: int = 0,
                     workers: int = 1, grid: float = 0.1, certify: bool = True, source: str = "quadrature",
                     settings: Settings = DEFAULT_SETTINGS) -> TightnessReport:
    """
    Per grid value h: analytic gap, Lipschitz-normalised lower bound, d_H bound and
    d_bL between Ψ_i of B_E(h) and B_E; then the log-log slope of d_bL against d_H.

    ``source="quadrature"`` compares the deterministic cap quadratures without
    coarsening (``samples`` and ``grid`` are unused and ``mc_stderr`` is 0);
    ``source="extracted"`` compares Monte-Carlo extractions from common draws,
    coarsened on ``grid``.
    """
    if source not in TIGHTNESS_SOURCES:
        raise ValueError(f"unknown source {source!r}; use one of {TIGHTNESS_SOURCES}")
    h_grid = [float(h) for h in h_grid]
    if not h_grid or any(not 0.0 < h <= 0.5 for h in h_grid):
        raise ValueError("grid values must lie in (0, 0.5]")
    _check_indices(n, i, h_grid[0])

    jobs = [BatchJob(id=f"h={h:g}", func=_tightness_point,
                     args=(n, i, h, samples, seed, grid, certify, source, settings)) for h in h_grid]
    results = BatchRunner(concurrency=workers).run_all(jobs)
    for r in results:
        if not r.success:
            raise r.exception
    rows = sorted((r.value for r in results), key=lambda row: -row.h)

    fit = fit_slope([r.dH_bound for r in rows], [r.dbl_empirical for r in rows])
    report = TightnessReport(rows=rows, fit=fit, metadata={"samples": samples, "seed": seed, "grid": grid,
                                                           "source": source})
    logger.info("Tightness report", extra={"n": n, "i": i, "points": len(rows), "slope": fit.slope,
                                           "violations": len(report.violations()), "source": source})
    return report
