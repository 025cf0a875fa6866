"""
Dense two-phase tableau simplex.

Problems are ``min/max c·x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and
``0 <= x <= upper``. Pivoting uses Dantzig's rule and switches to Bland's rule after
a run of degenerate pivots, so runs are deterministic and cannot cycle.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from supportlab.errors import Infeasible, SolverStall, Unbounded

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-11
DEGENERATE_RUN = 50


@dataclass
class LPProblem:
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    maximize: bool = False
    names: Optional[List[str]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        k = self.c.shape[0]
        if self.A_ub is None:
            self.A_ub, self.b_ub = np.zeros((0, k)), np.zeros(0)
        if self.A_eq is None:
            self.A_eq, self.b_eq = np.zeros((0, k)), np.zeros(0)
        self.A_ub = np.asarray(self.A_ub, dtype=float).reshape(-1, k)
        self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, k)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.upper is not None:
            self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
            if self.upper.shape != (k,):
                raise ValueError("one upper bound is required per variable")
        if self.A_ub.shape[0] != self.b_ub.shape[0] or self.A_eq.shape[0] != self.b_eq.shape[0]:
            raise ValueError("constraint rows and right-hand sides differ in length")
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(k)]

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: str
    basis: List[int]
    duals_ub: np.ndarray
    duals_eq: np.ndarray
    duals_upper: np.ndarray
    duality_gap: float
    iterations: int = 0
    backend: str = "simplex"
    extra: dict = field(default_factory=dict)


class _Tableau:
    def __init__(self, T: np.ndarray, rhs: np.ndarray, basis: List[int], cost: np.ndarray):
        self.T = T
        self.rhs = rhs
        self.basis = basis
        self.set_cost(cost)

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = cost
        cb = cost[self.basis]
        self.reduced = cost - cb @ self.T
        self.value = float(cb @ self.rhs)

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        self.rhs[r] /= piv
        factor = T[:, j].copy()
        factor[r] = 0.0
        T -= np.outer(factor, T[r])
        self.rhs -= factor * self.rhs[r]
        step = self.reduced[j]
        self.reduced = self.reduced - step * T[r]
        self.value += step * self.rhs[r]
        self.basis[r] = j

    def run(self, allowed: np.ndarray, max_iterations: int, tol: float) -> int:
        """Minimise over the columns in ``allowed``; returns the pivot count."""
        degenerate = 0
        bland = False
        for it in range(max_iterations):
            candidates = np.flatnonzero((self.reduced < -tol) & allowed)
            if candidates.size == 0:
                return it
            j = int(candidates[0]) if bland else int(candidates[np.argmin(self.reduced[candidates])])
            column = self.T[:, j]
            rows = np.flatnonzero(column > PIVOT_TOLERANCE)
            if rows.size == 0:
                raise Unbounded(f"objective unbounded along column {j}")
            ratios = self.rhs[rows] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12]
            r = int(ties[np.argmin([self.basis[t] for t in ties])])
            if best <= 1e-12:
                degenerate += 1
                bland = bland or degenerate > DEGENERATE_RUN
            else:
                degenerate, bland = 0, False
            self.pivot(r, j)
        logger.error("Simplex iteration limit reached", extra={"iterations": max_iterations, "error_type": "SolverStall"})
        raise SolverStall(f"simplex did not finish within {max_iterations} pivots")


def _standard_form(problem: LPProblem):
    """Rows [A_ub | I] (with slacks), bound rows, then A_eq; all right-hand sides >= 0."""
    k = problem.num_vars
    upper_idx = np.flatnonzero(np.isfinite(problem.upper)) if problem.upper is not None else np.zeros(0, int)
    if problem.upper is not None and np.any(problem.upper[upper_idx] < 0):
        raise Infeasible("negative upper bound with x >= 0")
    bound_rows = np.zeros((upper_idx.size, k))
    bound_rows[np.arange(upper_idx.size), upper_idx] = 1.0
    ineq = np.vstack([problem.A_ub, bound_rows])
    ineq_rhs = np.concatenate([problem.b_ub, problem.upper[upper_idx] if upper_idx.size else np.zeros(0)])
    m_ineq, m_eq = ineq.shape[0], problem.A_eq.shape[0]
    m = m_ineq + m_eq
    A = np.zeros((m, k + m_ineq))
    A[:m_ineq, :k] = ineq
    A[:m_ineq, k:] = np.eye(m_ineq)
    A[m_ineq:, :k] = problem.A_eq
    b = np.concatenate([ineq_rhs, problem.b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    return A * sign[:, None], b * sign, sign, upper_idx, m_ineq


def _crash_basis(A: np.ndarray) -> List[Optional[int]]:
    """Per row, a column that is a positive unit vector in that row, if any; later columns (slacks) win."""
    m = A.shape[0]
    nonzero = A != 0
    single = np.flatnonzero(nonzero.sum(axis=0) == 1)
    basis: List[Optional[int]] = [None] * m
    for j in single[::-1]:
        r = int(np.flatnonzero(nonzero[:, j])[0])
        if basis[r] is None and A[r, j] > 0:
            basis[r] = int(j)
    return basis


def _simplex(problem: LPProblem, max_iterations: int) -> LPSolution:
    A, b, sign, upper_idx, m_ineq = _standard_form(problem)
    m, n_cols = A.shape
    cost = np.zeros(n_cols)
    cost[:problem.num_vars] = -problem.c if problem.maximize else problem.c
    tol = 1e-10 * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)

    crash = _crash_basis(A)
    scale = np.array([A[r, j] if j is not None else 1.0 for r, j in enumerate(crash)])
    A = A / scale[:, None]
    b = b / scale
    need = [r for r, j in enumerate(crash) if j is None]
    T = np.hstack([A, np.zeros((m, len(need)))])
    for a, r in enumerate(need):
        T[r, n_cols + a] = 1.0
    basis = [j if j is not None else n_cols + need.index(r) for r, j in enumerate(crash)]
    allowed = np.ones(T.shape[1], dtype=bool)
    iterations = 0

    if need:
        phase1 = np.zeros(T.shape[1])
        phase1[n_cols:] = 1.0
        tab = _Tableau(T, b.copy(), basis, phase1)
        iterations += tab.run(allowed, max_iterations, 1e-12)
        if tab.value > 1e-9 * (1.0 + float(np.abs(b).sum())):
            raise Infeasible(f"phase 1 ended with infeasibility {tab.value:.3e}")
        keep_rows = np.ones(m, dtype=bool)
        for r, j in enumerate(tab.basis):
            if j >= n_cols:
                candidates = np.flatnonzero(np.abs(tab.T[r, :n_cols]) > 1e-9)
                if candidates.size:
                    tab.pivot(r, int(candidates[0]))
                else:
                    keep_rows[r] = False
        T = tab.T[keep_rows][:, :n_cols]
        rhs = tab.rhs[keep_rows]
        basis = [j for j, kept in zip(tab.basis, keep_rows) if kept]
        allowed = np.ones(n_cols, dtype=bool)
    else:
        rhs = b.copy()
        keep_rows = np.ones(m, dtype=bool)
        T = T[:, :n_cols]

    tab = _Tableau(T, rhs, basis, cost)
    iterations += tab.run(allowed, max_iterations - iterations, tol)

    x_std = np.zeros(n_cols)
    x_std[tab.basis] = tab.rhs
    x = x_std[:problem.num_vars]
    primal = float(problem.c @ x)

    # Duals from the final basis on the original (sign-normalised, scaled) rows.
    A_kept = A[keep_rows]
    y_kept = np.linalg.solve(A_kept[:, tab.basis].T, cost[tab.basis]) if tab.basis else np.zeros(0)
    y = np.zeros(m)
    y[keep_rows] = y_kept
    y = y / scale * sign
    if problem.maximize:
        y = -y
    b_orig = b * scale * sign
    dual = float(y @ b_orig)
    gap = abs(primal - dual)
    n_ub = problem.A_ub.shape[0]
    return LPSolution(x=x, objective=primal, status="optimal", basis=list(tab.basis),
                      duals_ub=y[:n_ub], duals_eq=y[m_ineq:], duals_upper=y[n_ub:m_ineq],
                      duality_gap=gap, iterations=iterations)


def _highs(problem: LPProblem) -> LPSolution:
    from scipy.optimize import linprog

    c = -problem.c if problem.maximize else problem.c
    bounds = [(0.0, None if problem.upper is None or not np.isfinite(u) else float(u))
              for u in (problem.upper if problem.upper is not None else [np.inf] * problem.num_vars)]
    res = linprog(c, A_ub=problem.A_ub if problem.A_ub.size else None, b_ub=problem.b_ub if problem.b_ub.size else None,
                  A_eq=problem.A_eq if problem.A_eq.size else None, b_eq=problem.b_eq if problem.b_eq.size else None,
                  bounds=bounds, method="highs")
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:
        raise Unbounded(res.message)
    if res.status != 0:
        raise SolverStall(res.message)
    flip = -1.0 if problem.maximize else 1.0
    duals_ub = flip * np.asarray(res.ineqlin.marginals) if problem.A_ub.size else np.zeros(0)
    duals_eq = flip * np.asarray(res.eqlin.marginals) if problem.A_eq.size else np.zeros(0)
    duals_upper = flip * np.asarray(res.upper.marginals)
    primal = float(problem.c @ res.x)
    dual = float(duals_ub @ problem.b_ub + duals_eq @ problem.b_eq)
    finite = np.zeros(problem.num_vars, bool)
    if problem.upper is not None:
        finite = np.isfinite(problem.upper)
        dual += float(duals_upper[finite] @ problem.upper[finite])
    return LPSolution(x=np.asarray(res.x), objective=primal, status="optimal", basis=[], duals_ub=duals_ub,
                      duals_eq=duals_eq, duals_upper=duals_upper[finite], duality_gap=abs(primal - dual),
                      iterations=int(getattr(res, "nit", 0)), backend="highs")


def lp_solve(problem: LPProblem, backend: str = "simplex", max_iterations: int = 200_000) -> LPSolution:
    """Solve ``problem`` to an optimal basic solution and report the duality gap."""
    logger.debug("Solving LP", extra={"vars": problem.num_vars, "ub_rows": problem.A_ub.shape[0],
                                      "eq_rows": problem.A_eq.shape[0], "backend": backend})
    if backend == "simplex":
        solution = _simplex(problem, max_iterations)
    elif backend == "highs":
        solution = _highs(problem)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    logger.debug("LP solved", extra={"objective": solution.objective, "duality_gap": solution.duality_gap,
                                     "iterations": solution.iterations, "backend": backend})
    return solution


def _term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    return f"{sign} {abs(coef)!r} {name}".strip() if first else f" {sign} {abs(coef)!r} {name}"


def _row(coefs: np.ndarray, names: List[str]) -> str:
    parts = []
    for j in np.flatnonzero(coefs):
        parts.append(_term(float(coefs[j]), names[j], not parts))
    return "".join(parts) if parts else f"0 {names[0]}"


def format_lp(problem: LPProblem) -> str:
    """CPLEX LP text of the problem."""
    names = problem.names
    lines = ["\\ supportlab LP dump", "Maximize" if problem.maximize else "Minimize", f" obj: {_row(problem.c, names)}",
             "Subject To"]
    for r in range(problem.A_ub.shape[0]):
        lines.append(f" c{r + 1}: {_row(problem.A_ub[r], names)} <= {float(problem.b_ub[r])!r}")
    for r in range(problem.A_eq.shape[0]):
        lines.append(f" e{r + 1}: {_row(problem.A_eq[r], names)} = {float(problem.b_eq[r])!r}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        if problem.upper is not None and np.isfinite(problem.upper[j]):
            lines.append(f" 0 <= {name} <= {float(problem.upper[j])!r}")
        else:
            lines.append(f" {name} >= 0")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(problem: LPProblem, path: Union[str, Path]) -> None:
    Path(path).write_text(format_lp(problem), encoding="utf-8")
    logger.info("Wrote LP file", extra={"path": str(path), "vars": problem.num_vars})
