import time

import numpy as np
import pytest

from supportlab.caps import tightness_report
from supportlab.metric import bounded_lipschitz_distance
from supportlab.models.measure import DiscreteMeasure, SpaceTag

pytestmark = pytest.mark.slow

H_GRID = [0.3, 0.2, 0.1, 0.05]


def random_sphere_measure(rng, k):
    U = rng.normal(size=(k, 3))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return DiscreteMeasure(SpaceTag.SPHERE, 3, U, rng.uniform(0.0, 2.0 / k, k))


class TestCapCutTightness:
    @pytest.fixture(scope="class")
    def timed_report(self):
        start = time.perf_counter()
        report = tightness_report(3, 1, H_GRID, certify=False)
        return report, time.perf_counter() - start

    def test_exponent_is_one_half(self, timed_report):
        report, _ = timed_report
        assert 0.45 <= report.fit.slope <= 0.6

    def test_distance_dominates_the_lower_bound(self, timed_report):
        report, _ = timed_report
        assert [row.h for row in report.rows] == H_GRID
        assert report.violations() == []
        assert all(row.dominated for row in report.rows)

    def test_finishes_within_ten_minutes(self, timed_report):
        _, elapsed = timed_report
        assert elapsed <= 600.0


class TestLargeTransshipment:
    def test_default_backend_matches_highs(self):
        rng = np.random.default_rng(5)
        mu, nu = random_sphere_measure(rng, 300), random_sphere_measure(rng, 300)
        default = bounded_lipschitz_distance(mu, nu)
        assert default.value == pytest.approx(bounded_lipschitz_distance(mu, nu, backend="highs").value, abs=1e-8)

    def test_three_thousand_atoms_in_minutes(self):
        rng = np.random.default_rng(6)
        mu, nu = random_sphere_measure(rng, 1500), random_sphere_measure(rng, 1500)
        start = time.perf_counter()
        result = bounded_lipschitz_distance(mu, nu)
        elapsed = time.perf_counter() - start
        assert result.atoms == 3000
        assert result.duality_gap <= 1e-8
        assert elapsed <= 300.0
