"""Contract tests: the on-disk formats other tools read."""
import csv
import io
import json

import numpy as np

from supportlab.caps import TIGHTNESS_COLUMNS
from supportlab.experiments import RECORD_COLUMNS, Theorem1Result, theorem1_csv, theorem1_json
from supportlab.fitting import SlopeFit
from supportlab.measure_io import dumps
from supportlab.models.experiment import ExperimentRecord
from supportlab.models.measure import DiscreteMeasure, SpaceTag


def sample_result():
    records = [ExperimentRecord(step=k, epsilon=eps, body_ids=["square", f"square+{eps:g}u"], delta=eps, radius=3.5,
                                indices=[0, 1], dbl=[0.1 * eps, 0.2 * eps], dbl_stderr=[0.01, 0.01],
                                coarsening_bound=[0.0, 0.0], ratios=[0.1 * eps ** 0.5, 0.2 * eps ** 0.5],
                                samples=1000, seed=0, wall_time=0.5)
               for k, eps in enumerate([0.2, 0.1])]
    return Theorem1Result(records=records, fits={0: SlopeFit(1.0, -2.3, 2), 1: SlopeFit(1.0, -1.6, 2)},
                          family={"kind": "translate", "index": 1, "seed": 0, "direction": [1.0, 0.0]})


class TestMeasureFormat:
    def test_block_layout(self):
        measure = DiscreteMeasure(SpaceTag.SIGMA, 2, [[0.0, 0.0, 1.0, 0.0]], [0.5], label="Lambda_0")
        lines = dumps([measure]).splitlines()
        assert lines[:7] == ["# supportlab-measure v1", "space=sigma", "n=2", "count=1", "signed=0",
                             "stderr=none", "label=Lambda_0"]
        # Four coordinates then the weight, all hex floats.
        assert [float.fromhex(t) for t in lines[7].split()] == [0.0, 0.0, 1.0, 0.0, 0.5]


class TestRecordCSV:
    def test_schema_and_columns(self):
        text = theorem1_csv(sample_result())
        schema, body = text.split("\n", 1)
        assert schema == "# supportlab-records v1"
        rows = list(csv.DictReader(io.StringIO(body)))
        assert tuple(rows[0]) == RECORD_COLUMNS
        assert [(r["step"], r["index"]) for r in rows] == [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
        assert float(rows[0]["ratio"]) == float(np.float64(0.1 * 0.2 ** 0.5))

    def test_tightness_columns(self):
        assert TIGHTNESS_COLUMNS[:4] == ("n", "i", "h", "N")
        assert len(set(TIGHTNESS_COLUMNS)) == len(TIGHTNESS_COLUMNS)


class TestJSONReport:
    def test_top_level_keys(self):
        data = json.loads(theorem1_json(sample_result()))
        assert data["schema_version"] == "supportlab-records v1"
        assert data["family"]["kind"] == "translate"
        assert data["slopes"] == {"0": 1.0, "1": 1.0}
        assert data["violations"] == []
        record = data["records"][0]
        assert set(record) == {"step", "epsilon", "body_ids", "delta", "radius", "indices", "dbl", "dbl_stderr",
                               "coarsening_bound", "ratios", "samples", "seed", "error"}

    def test_report_is_stable(self):
        assert theorem1_json(sample_result()) == theorem1_json(sample_result())
