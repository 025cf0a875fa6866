import json
import math

import pytest

from supportlab.config import Theorem1Config
from supportlab.errors import LadderNotShrinking
from supportlab.experiments import (CSV_SCHEMA, RECORD_COLUMNS, Theorem1Result, _check_ladder, _identity_violations,
                                    _ratio_violations, _slope_violations, run_theorem1, theorem1_csv, theorem1_json,
                                    verify_lemma41, write_csv)
from supportlab.fitting import SlopeFit
from supportlab.models.body import ConvexBody
from supportlab.models.experiment import ExperimentRecord

SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


def record(step, delta, dbl, stderr=0.0, bound=0.0):
    ratio = dbl / math.sqrt(delta) if delta > 0 else None
    return ExperimentRecord(step=step, epsilon=max(delta, 0.01), body_ids=["K", "L"], delta=delta, radius=3.0,
                            indices=[1], dbl=[dbl], dbl_stderr=[stderr], coarsening_bound=[bound], ratios=[ratio],
                            samples=100, seed=0, wall_time=0.25)


class TestLadderChecks:
    def test_strictly_decreasing_passes(self):
        _check_ladder([0.4, 0.2, 0.1])

    @pytest.mark.parametrize("deltas", [[0.2, 0.2], [0.1, 0.2]])
    def test_not_shrinking(self, deltas):
        with pytest.raises(LadderNotShrinking):
            _check_ladder(deltas)

    def test_identical_bodies_are_skipped(self):
        _check_ladder([0.0, 0.0, 0.0])


class TestViolations:
    def test_ratio_growth(self):
        records = [record(0, 0.04, 0.02), record(1, 0.01, 0.05)]
        found = _ratio_violations(records)
        assert len(found) == 1
        assert "index 1" in found[0]

    def test_ratio_within_error_bars(self):
        records = [record(0, 0.04, 0.02, stderr=0.01), record(1, 0.01, 0.02, stderr=0.01)]
        assert _ratio_violations(records) == []

    def test_shallow_slope_flagged_when_resolved(self):
        records = [record(0, 0.04, 0.2), record(1, 0.01, 0.15, stderr=0.001)]
        assert _slope_violations(records, {1: SlopeFit(0.2, 0.0, 2)})

    def test_shallow_slope_ignored_below_noise(self):
        records = [record(0, 0.04, 0.2), record(1, 0.01, 0.15, stderr=0.1)]
        assert _slope_violations(records, {1: SlopeFit(0.2, 0.0, 2)}) == []

    def test_identity(self):
        assert _identity_violations([record(0, 0.0, 0.5, stderr=0.01)])
        assert _identity_violations([record(0, 0.0, 0.02, stderr=0.01)]) == []
        assert _identity_violations([record(0, 0.0, 0.5, stderr=0.01, bound=1.0)]) == []


class TestReports:
    def test_write_csv(self):
        text = write_csv([{"a": 0.1, "b": None, "c": 3}], ["a", "b", "c"])
        assert text.splitlines() == [f"# {CSV_SCHEMA}", "a,b,c", "0.1,,3"]

    def test_theorem1_outputs(self):
        result = Theorem1Result(records=[record(0, 0.04, 0.02), record(1, 0.01, 0.01)],
                                fits={1: SlopeFit(0.5, 0.0, 2)}, family={"kind": "translate"})
        lines = theorem1_csv(result).splitlines()
        assert lines[1] == ",".join(RECORD_COLUMNS)
        assert len(lines) == 4
        data = json.loads(theorem1_json(result))
        assert set(data) == {"schema_version", "version", "family", "records", "slopes", "violations"}
        assert data["slopes"] == {"1": 0.5}
        assert all("wall_time" not in r for r in data["records"])

    def test_unusable_slope_is_null(self):
        result = Theorem1Result(records=[], fits={0: SlopeFit(float("nan"), float("nan"), 1)})
        assert json.loads(theorem1_json(result))["slopes"] == {"0": None}


class TestRuns:
    def test_translated_square_ladder(self):
        config = Theorem1Config(body={"kind": "vpolytope", "vertices": SQUARE, "label": "square"},
                                family={"kind": "translate", "direction": [1.0, 0.0]},
                                ladder=[0.2, 0.1], samples=800, seed=1, grid=0.3)
        result = run_theorem1(config)
        assert [r.step for r in result.records] == [0, 1]
        assert [r.delta for r in result.records] == pytest.approx([0.2, 0.1])
        assert all(not r.failed for r in result.records)
        assert set(result.fits) == {0, 1}
        assert result.family["kind"] == "translate"

    def test_worker_count_does_not_change_results(self):
        config = Theorem1Config(body={"kind": "vpolytope", "vertices": SQUARE},
                                family={"kind": "minkowski_round"}, ladder=[0.2, 0.1], samples=600, seed=2,
                                indices=[1], grid=0.3)
        assert theorem1_csv(run_theorem1(config, workers=1)) == theorem1_csv(run_theorem1(config, workers=2))

    def test_bad_indices(self):
        config = Theorem1Config(body={"kind": "vpolytope", "vertices": SQUARE},
                                family={"kind": "translate", "direction": [1.0, 0.0]}, ladder=[0.2, 0.1],
                                indices=[2])
        with pytest.raises(ValueError):
            run_theorem1(config)

    def test_shell_comparison_holds_for_translated_square(self):
        K = ConvexBody.vpolytope(SQUARE)
        report = verify_lemma41(K, K.translated([0.1, 0.0]), 0.5, 1500, seed=0, grid=0.2)
        assert report.holds
        assert report.lhs >= 0.0
        assert report.symmetric_difference > 0.0
        assert set(report.as_row()) >= {"lhs", "rhs", "stderr", "holds"}

    def test_shell_comparison_rejects_bad_rho(self):
        K = ConvexBody.vpolytope(SQUARE)
        with pytest.raises(ValueError):
            verify_lemma41(K, K, 0.0, 100, seed=0)
