import tempfile
from pathlib import Path

import numpy as np
import pytest

from supportlab.errors import Infeasible, Unbounded
from supportlab.lp import LPProblem, format_lp, lp_solve, write_lp_file


@pytest.fixture
def textbook_lp():
    """max x1 + x2 s.t. x1 + 2 x2 <= 4, 3 x1 + x2 <= 6; optimum (8/5, 6/5)."""
    return LPProblem(c=[1.0, 1.0], A_ub=[[1.0, 2.0], [3.0, 1.0]], b_ub=[4.0, 6.0], maximize=True)


class TestSimplex:
    def test_optimum_and_duals(self, textbook_lp):
        solution = lp_solve(textbook_lp)
        assert solution.status == "optimal"
        assert solution.objective == pytest.approx(2.8, abs=1e-12)
        np.testing.assert_allclose(solution.x, [1.6, 1.2], atol=1e-12)
        np.testing.assert_allclose(solution.duals_ub, [0.4, 0.2], atol=1e-12)
        assert solution.duality_gap < 1e-12

    def test_zero_objective_with_upper_bound(self):
        solution = lp_solve(LPProblem(c=[0.0], upper=[1.0], maximize=True))
        assert solution.objective == 0.0
        assert 0.0 <= solution.x[0] <= 1.0

    def test_upper_bound_is_active(self):
        solution = lp_solve(LPProblem(c=[2.0, 1.0], upper=[1.0, 3.0], maximize=True))
        assert solution.objective == pytest.approx(5.0)
        np.testing.assert_allclose(solution.duals_upper, [2.0, 1.0], atol=1e-12)

    def test_equality_rows_need_phase_one(self):
        # min x1 + 2 x2 s.t. x1 + x2 = 3, x1 - x2 = 1
        problem = LPProblem(c=[1.0, 2.0], A_eq=[[1.0, 1.0], [1.0, -1.0]], b_eq=[3.0, 1.0])
        solution = lp_solve(problem)
        np.testing.assert_allclose(solution.x, [2.0, 1.0], atol=1e-12)
        assert solution.objective == pytest.approx(4.0)
        # Dual of an equality row is free; strong duality still holds.
        assert float(solution.duals_eq @ problem.b_eq) == pytest.approx(4.0)

    def test_infeasible(self):
        problem = LPProblem(c=[1.0], A_ub=[[1.0]], b_ub=[1.0], A_eq=[[1.0]], b_eq=[2.0])
        with pytest.raises(Infeasible):
            lp_solve(problem)

    def test_unbounded(self):
        problem = LPProblem(c=[1.0, 0.0], A_ub=[[1.0, -1.0]], b_ub=[1.0], maximize=True)
        with pytest.raises(Unbounded):
            lp_solve(problem)

    def test_negative_upper_bound_is_infeasible(self):
        with pytest.raises(Infeasible):
            lp_solve(LPProblem(c=[1.0], upper=[-1.0]))

    def test_unknown_backend(self, textbook_lp):
        with pytest.raises(ValueError, match="unknown LP backend"):
            lp_solve(textbook_lp, backend="glpk")

    def test_mismatched_rows_rejected(self):
        with pytest.raises(ValueError):
            LPProblem(c=[1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0, 2.0])


class TestHighsBackend:
    def test_agrees_with_simplex(self, textbook_lp):
        ours = lp_solve(textbook_lp)
        theirs = lp_solve(textbook_lp, backend="highs")
        assert theirs.backend == "highs"
        assert theirs.objective == pytest.approx(ours.objective, abs=1e-9)
        np.testing.assert_allclose(theirs.duals_ub, ours.duals_ub, atol=1e-9)

    def test_infeasible(self):
        problem = LPProblem(c=[1.0], A_ub=[[1.0]], b_ub=[1.0], A_eq=[[1.0]], b_eq=[2.0])
        with pytest.raises(Infeasible):
            lp_solve(problem, backend="highs")


class TestLPText:
    def test_format_lp(self, textbook_lp):
        text = format_lp(textbook_lp)
        lines = text.splitlines()
        assert lines[1] == "Maximize"
        assert lines[2] == " obj: 1.0 x1 + 1.0 x2"
        assert " c1: 1.0 x1 + 2.0 x2 <= 4.0" in lines
        assert " x2 >= 0" in lines
        assert lines[-1] == "End"

    def test_write_lp_file(self, textbook_lp):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "problem.lp"
            write_lp_file(textbook_lp, path)
            assert path.read_text(encoding="utf-8") == format_lp(textbook_lp)
