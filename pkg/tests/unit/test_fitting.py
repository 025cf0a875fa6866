import math

import pytest

from supportlab.fitting import fit_slope


class TestFitSlope:
    def test_exact_power_law(self):
        x = [0.1, 0.05, 0.025, 0.0125]
        y = [3.0 * v ** 0.5 for v in x]
        fit = fit_slope(x, y)
        assert fit.usable
        assert fit.points == 4
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)

    def test_skips_non_positive_points(self):
        fit = fit_slope([0.2, 0.1, 0.0, 0.05], [0.4, 0.2, 0.1, -0.3])
        assert fit.points == 2
        assert fit.slope == pytest.approx(1.0)

    def test_smallest_x_weighs_double(self):
        # Unweighted the slope is exactly 1/2; doubling the last point gives 5/11.
        fit = fit_slope([1.0, 0.5, 0.25], [1.0, 0.5, 0.5])
        assert fit.slope == pytest.approx(5.0 / 11.0, abs=1e-12)

    def test_too_few_points(self):
        fit = fit_slope([0.1], [0.2])
        assert not fit.usable
        assert math.isnan(fit.slope)

    def test_constant_x(self):
        assert not fit_slope([0.1, 0.1], [0.2, 0.3]).usable
