import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from supportlab.config import Settings
from supportlab.errors import TooManyAtoms
from supportlab.metric import (bounded_lipschitz_distance, check_witness, coarsen, merge_support,
                               rotated_cube_example, total_variation_distance)
from supportlab.models.measure import DiscreteMeasure, SpaceTag


def sigma_point(x, y, angle=0.0):
    return [x, y, math.cos(angle), math.sin(angle)]


def sigma_measure(rows, weights, signed=False):
    return DiscreteMeasure(SpaceTag.SIGMA, 2, np.array(rows, dtype=float), np.array(weights, dtype=float),
                           signed=signed)


def circle_measure(angles, weights):
    angles = np.asarray(angles, dtype=float)
    return DiscreteMeasure(SpaceTag.SPHERE, 2, np.column_stack([np.cos(angles), np.sin(angles)]), weights)


def scattered_rows(rng, k):
    """k random Σ^2 rows with positions in the square [-1, 1]^2."""
    return np.array([sigma_point(x, y, a) for x, y, a in zip(rng.uniform(-1, 1, k), rng.uniform(-1, 1, k),
                                                             rng.uniform(0, 2 * math.pi, k))])


class TestTwoPoint:
    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_dirac_pair(self, t):
        mu = sigma_measure([sigma_point(0.0, 0.0)], [1.0])
        nu = sigma_measure([sigma_point(t, 0.0)], [1.0])
        result = bounded_lipschitz_distance(mu, nu)
        assert abs(result.value - min(t, 2.0)) <= 1e-9
        assert result.duality_gap <= 1e-9

    def test_highs_backend_agrees(self):
        mu = sigma_measure([sigma_point(0.0, 0.0)], [1.0])
        nu = sigma_measure([sigma_point(0.5, 0.0)], [1.0])
        assert bounded_lipschitz_distance(mu, nu, backend="highs").value == pytest.approx(0.5, abs=1e-9)

    def test_unequal_mass_at_one_point(self):
        mu = sigma_measure([sigma_point(0.0, 0.0)], [2.0])
        nu = sigma_measure([sigma_point(0.0, 0.0)], [0.5])
        assert bounded_lipschitz_distance(mu, nu).value == pytest.approx(1.5, abs=1e-12)


class TestBoundedLipschitz:
    @pytest.fixture
    def pair(self):
        mu = circle_measure([0.0, 1.0, 2.0, 4.0], [0.3, 0.2, 0.4, 0.1])
        nu = circle_measure([0.1, 1.5, 3.0], [0.5, 0.25, 0.25])
        return mu, nu

    def test_identity(self, pair):
        mu, _ = pair
        result = bounded_lipschitz_distance(mu, mu)
        assert result.value == 0.0
        assert result.atoms == 0

    def test_symmetric(self, pair):
        mu, nu = pair
        assert bounded_lipschitz_distance(mu, nu).value == pytest.approx(bounded_lipschitz_distance(nu, mu).value,
                                                                         abs=1e-9)

    def test_positive_homogeneity(self, pair):
        mu, nu = pair
        base = bounded_lipschitz_distance(mu, nu).value
        scaled = bounded_lipschitz_distance(mu.scaled(3.0), nu.scaled(3.0)).value
        assert scaled == pytest.approx(3.0 * base, abs=1e-9)

    def test_witness_is_feasible_and_tight(self, pair):
        mu, nu = pair
        result = bounded_lipschitz_distance(mu, nu)
        merged = merge_support(mu, nu)
        check = check_witness(result.witness.locations, result.witness.values, merged.difference, result.value)
        assert check.ok
        assert np.all(np.abs(result.witness.values) <= 1.0)

    def test_signed_weights(self):
        mu = DiscreteMeasure(SpaceTag.SPHERE, 2, [[1.0, 0.0], [0.0, 1.0]], [1.0, -0.5], signed=True)
        nu = DiscreteMeasure.empty(SpaceTag.SPHERE, 2)
        # f(e1) = 1, and |e1 - e2| = sqrt(2) keeps f(e2) >= 1 - sqrt(2).
        expected = 1.0 + 0.5 * (math.sqrt(2.0) - 1.0)
        assert bounded_lipschitz_distance(mu, nu).value == pytest.approx(expected, abs=1e-9)

    def test_grid_error_within_bound(self, pair):
        mu, nu = pair
        exact = bounded_lipschitz_distance(mu, nu).value
        coarse = bounded_lipschitz_distance(mu, nu, grid=1.0)
        assert coarse.coarsening_bound > 0
        assert abs(coarse.value - exact) <= coarse.coarsening_bound + 1e-9

    def test_too_many_atoms(self, pair):
        mu, nu = pair
        with pytest.raises(TooManyAtoms):
            bounded_lipschitz_distance(mu, nu, settings=Settings(atom_cap=3))

    def test_incompatible_spaces(self, pair):
        mu, _ = pair
        other = sigma_measure([sigma_point(0.0, 0.0)], [1.0])
        with pytest.raises(ValueError, match="different spaces"):
            bounded_lipschitz_distance(mu, other)

    def test_as_record(self, pair):
        record = bounded_lipschitz_distance(*pair).as_record()
        assert set(record) == {"value", "coarsening_bound", "duality_gap"}


class TestSupportHelpers:
    def test_merge_support_joins_shared_atoms(self):
        mu = circle_measure([0.0, 1.0], [1.0, 2.0])
        nu = circle_measure([1.0, 2.0], [0.5, 0.5])
        merged = merge_support(mu, nu)
        assert merged.locations.shape == (3, 2)
        np.testing.assert_allclose(sorted(merged.difference), [-0.5, 1.0, 1.5])

    def test_total_variation(self):
        mu = circle_measure([0.0, 1.0], [1.0, 2.0])
        nu = circle_measure([1.0, 2.0], [0.5, 0.5])
        assert total_variation_distance(mu, nu) == pytest.approx(1.0 + 1.5 + 0.5)

    def test_coarsen_keeps_mass_and_bounds_displacement(self):
        mu = circle_measure(np.linspace(0.0, 0.3, 7), np.full(7, 0.5))
        coarse, bound = coarsen(mu, 0.25)
        assert len(coarse) < len(mu)
        assert coarse.total_mass == pytest.approx(mu.total_mass)
        assert 0 < bound <= 0.25 * math.sqrt(2) * float(np.abs(mu.weights).sum())

    def test_coarsen_rejects_bad_cell(self):
        with pytest.raises(ValueError):
            coarsen(circle_measure([0.0], [1.0]), 0.0)

    def test_check_witness_flags_steep_function(self):
        locations = np.array([[0.0, 0.0], [0.1, 0.0]])
        check = check_witness(locations, np.array([0.5, -0.5]), np.array([1.0, -1.0]), 1.0)
        assert check.max_lipschitz_excess == pytest.approx(0.9)
        assert not check.ok

    def test_check_witness_flags_wrong_objective(self):
        locations = np.array([[0.0, 0.0], [3.0, 0.0]])
        check = check_witness(locations, np.array([1.0, -1.0]), np.array([1.0, -1.0]), 1.5)
        assert check.objective_error == pytest.approx(0.5 / 1.5)
        assert not check.ok


@st.composite
def circle_pairs(draw):
    size = st.integers(min_value=1, max_value=5)
    angle = st.floats(min_value=0.0, max_value=6.28, allow_nan=False)
    weight = st.floats(min_value=0.01, max_value=2.0, allow_nan=False)
    k, m = draw(size), draw(size)
    mu = circle_measure(draw(st.lists(angle, min_size=k, max_size=k)), draw(st.lists(weight, min_size=k, max_size=k)))
    nu = circle_measure(draw(st.lists(angle, min_size=m, max_size=m)), draw(st.lists(weight, min_size=m, max_size=m)))
    return mu, nu


class TestProperties:
    @hyp_settings(max_examples=30, deadline=None)
    @given(circle_pairs())
    def test_bounded_by_total_variation_and_mass_gap(self, pair):
        mu, nu = pair
        value = bounded_lipschitz_distance(mu, nu).value
        assert value <= total_variation_distance(mu, nu) + 1e-9
        assert value >= abs(mu.total_mass - nu.total_mass) - 1e-9

    @hyp_settings(max_examples=25, deadline=None)
    @given(circle_pairs(), circle_pairs())
    def test_triangle_inequality(self, first, second):
        mu, nu = first
        rho = second[0]
        direct = bounded_lipschitz_distance(mu, rho).value
        via = bounded_lipschitz_distance(mu, nu).value + bounded_lipschitz_distance(nu, rho).value
        assert direct <= via + 1e-9

    @pytest.mark.parametrize("shift", [0.05, 0.3, 1.0, 3.0])
    def test_translation_bound(self, shift):
        rng = np.random.default_rng(int(shift * 100))
        rows = scattered_rows(rng, 12)
        weights = rng.uniform(0.1, 1.0, 12)
        t = shift * np.array([0.6, 0.8])
        moved = rows.copy()
        moved[:, :2] += t
        value = bounded_lipschitz_distance(sigma_measure(rows, weights), sigma_measure(moved, weights)).value
        assert value <= min(shift, 2.0) * float(weights.sum()) + 1e-9


class TestRotatedCube:
    def test_total_variation_jumps_while_dbl_stays_small(self):
        report = rotated_cube_example(0.05)
        assert report.hausdorff < 0.05
        assert report.bounded_lipschitz < 0.5
        assert report.total_variation > 5.0


class TestBackends:
    @pytest.fixture
    def scattered(self):
        rng = np.random.default_rng(21)
        return (sigma_measure(scattered_rows(rng, 15), rng.uniform(0.1, 1.0, 15)),
                sigma_measure(scattered_rows(rng, 12), rng.uniform(0.1, 1.0, 12)))

    @pytest.mark.parametrize("backend", ["simplex", "highs"])
    def test_network_agrees_with_dense_backends(self, scattered, backend):
        network = bounded_lipschitz_distance(*scattered, backend="network")
        dense = bounded_lipschitz_distance(*scattered, backend=backend)
        assert network.value == pytest.approx(dense.value, abs=1e-9)
        assert network.duality_gap <= 1e-8

    def test_network_is_the_default(self, scattered):
        assert Settings().lp_backend == "network"
        default = bounded_lipschitz_distance(*scattered)
        assert default.value == pytest.approx(bounded_lipschitz_distance(*scattered, backend="highs").value,
                                              abs=1e-9)


class TestDifferenceCoarsening:
    def test_shared_atoms_do_not_count_toward_the_bound(self):
        angles = np.linspace(0.1, 6.2, 50)
        nu = circle_measure(angles, np.ones(50))
        mu = circle_measure(np.append(angles, 0.05), np.append(np.ones(50), 0.1))
        result = bounded_lipschitz_distance(mu, nu, grid=0.5)
        assert result.value == pytest.approx(0.1, abs=1e-12)
        assert result.coarsening_bound <= 0.1 * 0.5 * math.sqrt(2.0) + 1e-12

    def test_bound_covers_the_coarsening_error(self):
        rng = np.random.default_rng(8)
        mu = circle_measure(rng.uniform(0, 2 * math.pi, 40), rng.uniform(0.1, 1.0, 40))
        nu = circle_measure(rng.uniform(0, 2 * math.pi, 40), rng.uniform(0.1, 1.0, 40))
        exact = bounded_lipschitz_distance(mu, nu).value
        for cell in (0.2, 0.5, 1.0):
            coarse = bounded_lipschitz_distance(mu, nu, grid=cell)
            assert abs(coarse.value - exact) <= coarse.coarsening_bound + 1e-9
