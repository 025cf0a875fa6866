"""
Ladder experiments for the Hölder bound d_bL(Λ_i(K), Λ_i(L)) <= C(R) d_H(K, L)^{1/2}
and the shell-measure comparison inequality behind it.
"""
import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from supportlab import __version__
from supportlab.batch_runner import BatchJob, BatchRunner
from supportlab.config import DEFAULT_SETTINGS, Lemma41Config, Settings, Theorem1Config
from supportlab.errors import LadderNotShrinking, SupportLabError
from supportlab.fitting import SlopeFit, fit_slope
from supportlab.geometry import box_draws, circumradius_bound, common_box, hausdorff_distance, project_many
from supportlab.measures import empirical_parallel_measure, extract_support_measures_pair
from supportlab.metric import bounded_lipschitz_distance
from supportlab.models.body import ConvexBody
from supportlab.models.experiment import ExperimentRecord, PerturbationFamily

logger = logging.getLogger(__name__)

RATIO_GROWTH = 1.2
FIT_TOLERANCE = 0.1
RECORD_COLUMNS = ("step", "epsilon", "delta", "radius", "index", "dbl", "dbl_stderr", "coarsening_bound", "ratio")


@dataclass
class Theorem1Result:
    records: List[ExperimentRecord]
    fits: Dict[int, SlopeFit]
    violations: List[str] = field(default_factory=list)
    family: dict = field(default_factory=dict)


def _ladder_record(K: ConvexBody, L: ConvexBody, step: int, eps: float, delta: float, indices: List[int],
                   samples: int, seed: int, grid: float, settings: Settings) -> ExperimentRecord:
    start = time.perf_counter()
    base = dict(step=step, epsilon=eps, body_ids=[K.label or K.kind.value, L.label or L.kind.value],
                delta=delta, radius=max(circumradius_bound(K), circumradius_bound(L)), samples=samples, seed=seed)
    try:
        fam_k, fam_l = extract_support_measures_pair(K, L, samples, seed, settings)
        dbl, stderr, bounds, ratios = [], [], [], []
        for i in indices:
            result = bounded_lipschitz_distance(fam_k[i], fam_l[i], grid=grid, settings=settings)
            dbl.append(result.value)
            stderr.append(math.hypot(fam_k.stderrs[i], fam_l.stderrs[i]))
            bounds.append(result.coarsening_bound)
            ratios.append(result.value / math.sqrt(delta) if delta > 0 else None)
    except SupportLabError as e:
        logger.error("Ladder step failed", extra={"step": step, "epsilon": eps, "error": str(e),
                                                  "error_type": type(e).__name__})
        return ExperimentRecord(**base, error=f"{type(e).__name__}: {e}")
    record = ExperimentRecord(**base, indices=list(indices), dbl=dbl, dbl_stderr=stderr, coarsening_bound=bounds,
                              ratios=ratios, wall_time=time.perf_counter() - start)
    logger.info("Ladder step", extra={"step": step, "epsilon": eps, "delta": delta, "dbl": dbl, "ratios": ratios})
    return record


def _check_ladder(deltas: List[float]) -> None:
    if all(d == 0 for d in deltas):
        return
    for a, b in zip(deltas, deltas[1:]):
        if not b < a:
            logger.error("Ladder not shrinking", extra={"deltas": deltas, "error_type": "LadderNotShrinking"})
            raise LadderNotShrinking(f"Hausdorff distances {deltas} do not decrease strictly")


def _ratio_violations(records: List[ExperimentRecord]) -> List[str]:
    found = []
    ok = [r for r in records if not r.failed and r.delta > 0]
    for prev, cur in zip(ok, ok[1:]):
        for k, i in enumerate(cur.indices):
            root_prev, root_cur = math.sqrt(prev.delta), math.sqrt(cur.delta)
            upper_prev = prev.ratios[k] + 3.0 * prev.dbl_stderr[k] / root_prev
            lower_cur = cur.ratios[k] - 3.0 * cur.dbl_stderr[k] / root_cur
            if lower_cur > RATIO_GROWTH * upper_prev:
                found.append(f"ratio for index {i} grew from {prev.ratios[k]:.6g} to {cur.ratios[k]:.6g} "
                             f"between steps {prev.step} and {cur.step}")
    return found


def _fits(records: List[ExperimentRecord], indices: List[int]) -> Dict[int, SlopeFit]:
    usable = [r for r in records if not r.failed and 0 < r.delta < 1]
    return {i: fit_slope([r.delta for r in usable], [r.dbl[k] for r in usable]) for k, i in enumerate(indices)}


def _slope_violations(records: List[ExperimentRecord], fits: Dict[int, SlopeFit]) -> List[str]:
    usable = [r for r in records if not r.failed and 0 < r.delta < 1]
    if not usable:
        return []
    finest = min(usable, key=lambda r: r.delta)
    found = []
    for k, (i, fit) in enumerate(fits.items()):
        # Below the noise floor the slope flattens; only a resolved signal is tested.
        resolved = finest.dbl[k] > 3.0 * finest.dbl_stderr[k]
        if fit.usable and resolved and fit.slope < 0.5 - FIT_TOLERANCE:
            found.append(f"fitted exponent {fit.slope:.4g} for index {i} is below 1/2")
    return found


def _identity_violations(records: List[ExperimentRecord]) -> List[str]:
    found = []
    for r in records:
        if r.failed or r.delta > 0:
            continue
        for k, i in enumerate(r.indices):
            if r.dbl[k] > 3.0 * r.dbl_stderr[k] + r.coarsening_bound[k]:
                found.append(f"identical bodies at step {r.step} give d_bL {r.dbl[k]:.6g} for index {i}")
    return found


def run_theorem1(config: Theorem1Config, workers: int = 1, settings: Settings = DEFAULT_SETTINGS) -> Theorem1Result:
    """
    Walk the perturbation ladder, compute δ and per-index d_bL with common random
    numbers, and fit log d_bL against log δ.

    Records with δ >= 1 are reported but left out of the fits. A failing step
    yields a record carrying the error; the run goes on.
    """
    family = PerturbationFamily.from_spec(config.family, dimension=config.dimension)
    K = family.base_body(config.body.build() if config.body is not None else None)
    n = K.dim
    indices = config.indices if config.indices is not None else list(range(n))
    if any(not 0 <= i <= n - 1 for i in indices):
        raise ValueError(f"indices must lie in 0..{n - 1}")
    logger.info("Starting ladder experiment", extra={"family": family.describe(), "ladder": config.ladder,
                                                     "samples": config.samples, "seed": config.seed,
                                                     "workers": workers})

    bodies = [family.perturb(K, eps) for eps in config.ladder]
    runner = BatchRunner(concurrency=workers)
    distance_jobs = [BatchJob(id=f"delta-{k}", func=hausdorff_distance, args=(K, L, settings))
                     for k, L in enumerate(bodies)]
    deltas = []
    for result in runner.run_all(distance_jobs):
        if not result.success:
            raise result.exception
        deltas.append(float(result.value))
    _check_ladder(deltas)

    jobs = [BatchJob(id=f"step-{k}", func=_ladder_record,
                     args=(K, L, k, eps, delta, indices, config.samples, config.seed, config.grid, settings))
            for k, (L, eps, delta) in enumerate(zip(bodies, config.ladder, deltas))]
    records = []
    for result in runner.run_all(jobs):
        if not result.success:
            raise result.exception
        records.append(result.value)
    records.sort(key=lambda r: r.step)

    fits = _fits(records, indices)
    violations = _ratio_violations(records) + _slope_violations(records, fits) + _identity_violations(records)
    for v in violations:
        logger.warning("Ladder check failed", extra={"violation": v})
    logger.info("Ladder experiment finished", extra={"records": len(records),
                                                     "slopes": {i: f.slope for i, f in fits.items()},
                                                     "violations": len(violations)})
    return Theorem1Result(records=records, fits=fits, violations=violations, family=family.describe())


# -- shell-measure comparison --------------------------------------------------

@dataclass(frozen=True)
class Lemma41Report:
    lhs: float
    projection_term: float
    normal_term: float
    symmetric_difference: float
    stderr: float
    coarsening_bound: float
    rho: float
    samples: int
    seed: int

    @property
    def rhs(self) -> float:
        return self.projection_term + self.normal_term + self.symmetric_difference

    @property
    def holds(self) -> bool:
        """LHS <= RHS within three combined standard errors, crediting the coarsening bound."""
        return self.lhs - self.coarsening_bound <= self.rhs + 3.0 * self.stderr

    def as_row(self) -> dict:
        return {"rho": self.rho, "lhs": self.lhs, "projection_term": self.projection_term,
                "normal_term": self.normal_term, "symmetric_difference": self.symmetric_difference,
                "rhs": self.rhs, "stderr": self.stderr, "coarsening_bound": self.coarsening_bound,
                "holds": self.holds}


def verify_lemma41(K: ConvexBody, L: ConvexBody, rho: float, count: int, seed: int, grid: Optional[float] = None,
                   settings: Settings = DEFAULT_SETTINGS) -> Lemma41Report:
    """
    d_bL(μ_{K,ρ}, μ_{L,ρ}) against ∫|p_K - p_L| + ∫|u_K - u_L| over K^ρ ∩ L^ρ plus
    the volume of K^ρ △ L^ρ, where K^ρ = K_ρ \\ K. One shared box and one set of
    draws serve all four terms.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    box = common_box(K, L, rho, settings)
    mu_k = empirical_parallel_measure(K, rho, count, seed, box=box, settings=settings)
    mu_l = empirical_parallel_measure(L, rho, count, seed, box=box, settings=settings)
    distance = bounded_lipschitz_distance(mu_k, mu_l, grid=grid, settings=settings)

    cell = float(np.prod(box[1] - box[0])) / count
    sums = np.zeros(3)
    total_squares = 0.0
    for X in box_draws(box[0], box[1], count, seed, settings.block_size):
        pk, dk, uk = project_many(K, X, settings)
        pl, dl, ul = project_many(L, X, settings)
        in_k = (dk > 0) & (dk <= rho)
        in_l = (dl > 0) & (dl <= rho)
        both = in_k & in_l
        terms = np.zeros((X.shape[0], 3))
        terms[both, 0] = np.linalg.norm(pk[both] - pl[both], axis=1)
        terms[both, 1] = np.linalg.norm(uk[both] - ul[both], axis=1)
        terms[:, 2] = (in_k ^ in_l).astype(float)
        sums += terms.sum(axis=0)
        total_squares += float((terms.sum(axis=1) ** 2).sum())
    means = sums / count
    total_mean = means.sum()
    rhs_var = max(total_squares / count - total_mean ** 2, 0.0) / max(count - 1, 1)
    lhs_var = (mu_k.stderr or 0.0) ** 2 + (mu_l.stderr or 0.0) ** 2
    stderr = math.sqrt(cell ** 2 * count ** 2 * rhs_var + lhs_var)
    report = Lemma41Report(lhs=distance.value, projection_term=cell * sums[0], normal_term=cell * sums[1],
                           symmetric_difference=cell * sums[2], stderr=stderr,
                           coarsening_bound=distance.coarsening_bound, rho=rho, samples=count, seed=seed)
    logger.info("Shell comparison", extra={**report.as_row(), "seed": seed})
    return report


def run_lemma41(config: Lemma41Config, settings: Settings = DEFAULT_SETTINGS) -> Lemma41Report:
    return verify_lemma41(config.body_k.build(), config.body_l.build(), config.rho, config.samples, config.seed,
                          grid=config.grid, settings=settings)


# -- reports -------------------------------------------------------------------

CSV_SCHEMA = "supportlab-records v1"


class RecordRow(BaseModel):
    step: int
    epsilon: float
    delta: float
    radius: float
    index: int
    dbl: float
    dbl_stderr: float
    coarsening_bound: float
    ratio: Optional[float]


class Theorem1Report(BaseModel):
    schema_version: str = CSV_SCHEMA
    version: str = __version__
    family: dict
    records: List[dict]
    slopes: Dict[str, Optional[float]]
    violations: List[str]


def _rows(result: Theorem1Result) -> List[dict]:
    rows = []
    for r in result.records:
        if r.failed:
            continue
        for k, i in enumerate(r.indices):
            rows.append(RecordRow(step=r.step, epsilon=r.epsilon, delta=r.delta, radius=r.radius, index=i,
                                  dbl=r.dbl[k], dbl_stderr=r.dbl_stderr[k], coarsening_bound=r.coarsening_bound[k],
                                  ratio=r.ratios[k]).model_dump())
    return rows


def write_csv(rows: List[dict], columns, schema: str = CSV_SCHEMA) -> str:
    """CSV text headed by a versioned comment line; floats in repr form."""
    buffer = io.StringIO()
    buffer.write(f"# {schema}\n")
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else repr(row[k]) if isinstance(row[k], float) else row[k])
                         for k in columns})
    return buffer.getvalue()


def theorem1_csv(result: Theorem1Result) -> str:
    return write_csv(_rows(result), RECORD_COLUMNS)


def theorem1_json(result: Theorem1Result) -> str:
    slopes = {str(i): (f.slope if f.usable else None) for i, f in result.fits.items()}
    try:
        report = Theorem1Report(family=result.family, records=[r.report_dict() for r in result.records],
                                slopes=slopes, violations=result.violations)
    except ValidationError as e:
        logger.error("Report failed schema check", extra={"error": str(e), "error_type": type(e).__name__})
        raise
    return json.dumps(report.model_dump(), sort_keys=True, indent=2) + "\n"
