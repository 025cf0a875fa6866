import itertools

import numpy as np
import pytest

from supportlab.errors import SolverStall
from supportlab.lp import LPProblem, lp_solve
from supportlab.network import TransshipmentNetwork


def all_pairs(m):
    return [(a, b) for a, b in itertools.permutations(range(m), 2)]


def distances(locations, pairs):
    index = np.array(pairs)
    return np.linalg.norm(locations[index[:, 0]] - locations[index[:, 1]], axis=1)


def dense_optimum(locations, supplies, pairs):
    """The same transshipment problem as one dense LP."""
    m = supplies.shape[0]
    cols = len(pairs) + 2 * m
    A = np.zeros((m, cols))
    cost = np.ones(cols)
    cost[:len(pairs)] = distances(locations, pairs)
    for k, (a, b) in enumerate(pairs):
        A[a, k], A[b, k] = 1.0, -1.0
    A[np.arange(m), len(pairs) + np.arange(m)] = 1.0
    A[np.arange(m), len(pairs) + m + np.arange(m)] = -1.0
    return lp_solve(LPProblem(c=cost, A_eq=A, b_eq=supplies), backend="highs").objective


def random_instance(seed, m=10):
    rng = np.random.default_rng(seed)
    locations = rng.uniform(-1.5, 1.5, size=(m, 2))
    supplies = rng.normal(size=m)
    return locations, supplies


def solved(locations, supplies, pairs):
    network = TransshipmentNetwork(supplies)
    network.add_arcs(pairs, distances(locations, pairs))
    return network.solve()


class TestSmallNetworks:
    def test_close_pair_uses_the_pair_arc(self):
        locations = np.array([[0.0, 0.0], [0.5, 0.0]])
        solution = solved(locations, np.array([1.0, -1.0]), all_pairs(2))
        assert solution.objective == pytest.approx(0.5, abs=1e-12)
        assert solution.potentials[0] - solution.potentials[1] == pytest.approx(0.5, abs=1e-12)
        assert solution.duality_gap <= 1e-12

    def test_far_pair_goes_through_ground(self):
        locations = np.array([[0.0, 0.0], [3.0, 0.0]])
        solution = solved(locations, np.array([1.0, -1.0]), all_pairs(2))
        assert solution.objective == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(solution.potentials, [1.0, -1.0], atol=1e-12)

    def test_single_atom(self):
        solution = TransshipmentNetwork(np.array([-0.25])).solve()
        assert solution.objective == pytest.approx(0.25)
        assert solution.potentials[0] == pytest.approx(-1.0)
        assert solution.iterations == 0

    def test_empty_network(self):
        solution = TransshipmentNetwork(np.zeros(0)).solve()
        assert solution.objective == 0.0
        assert solution.potentials.shape == (0,)

    def test_pivot_limit(self):
        network = TransshipmentNetwork(np.array([1.0, -1.0]))
        network.add_arcs([(0, 1)], [0.5])
        with pytest.raises(SolverStall):
            network.solve(max_iterations=0)


class TestAgainstDenseLP:
    @pytest.mark.parametrize("seed", range(6))
    def test_objective_matches_highs(self, seed):
        locations, supplies = random_instance(seed)
        pairs = all_pairs(len(supplies))
        solution = solved(locations, supplies, pairs)
        assert solution.objective == pytest.approx(dense_optimum(locations, supplies, pairs), abs=1e-9)
        assert solution.duality_gap <= 1e-9

    @pytest.mark.parametrize("seed", range(6))
    def test_potentials_are_a_feasible_witness(self, seed):
        locations, supplies = random_instance(seed, m=14)
        solution = solved(locations, supplies, all_pairs(len(supplies)))
        f = solution.potentials
        assert np.all(np.abs(f) <= 1.0 + 1e-12)
        dist = np.linalg.norm(locations[:, None, :] - locations[None, :, :], axis=2)
        assert np.all(f[:, None] - f[None, :] <= dist + 1e-12)
        assert float(f @ supplies) == pytest.approx(solution.objective, abs=1e-10)

    def test_flow_conserves_supply(self):
        locations, supplies = random_instance(11, m=8)
        pairs = all_pairs(8)
        network = TransshipmentNetwork(supplies)
        network.add_arcs(pairs, distances(locations, pairs))
        solution = network.solve()
        balance = np.zeros(9)
        np.add.at(balance, network.tail, solution.flow)
        np.subtract.at(balance, network.head, solution.flow)
        np.testing.assert_allclose(balance[:8], supplies, atol=1e-12)
        assert np.all(solution.flow >= 0.0)


class TestWarmStart:
    def test_added_arcs_reach_the_full_optimum(self):
        locations, supplies = random_instance(3, m=12)
        pairs = all_pairs(12)
        first, rest = pairs[::3], [p for k, p in enumerate(pairs) if k % 3]
        network = TransshipmentNetwork(supplies)
        network.add_arcs(first, distances(locations, first))
        partial = network.solve()
        network.add_arcs(rest, distances(locations, rest))
        full = network.solve()
        assert full.objective <= partial.objective + 1e-12
        assert full.objective == pytest.approx(solved(locations, supplies, pairs).objective, abs=1e-10)
        assert network.arcs == 2 * 12 + len(pairs)

    def test_adding_nothing_keeps_the_solution(self):
        locations, supplies = random_instance(5, m=6)
        pairs = all_pairs(6)
        network = TransshipmentNetwork(supplies)
        network.add_arcs(pairs, distances(locations, pairs))
        before = network.solve()
        network.add_arcs([], [])
        after = network.solve()
        assert after.iterations == 0
        assert after.objective == before.objective
