import math

import numpy as np
import pytest

from supportlab.config import Settings
from supportlab.errors import InvalidBody
from supportlab.kinds import strategy_for
from supportlab.kinds.vpolytope import min_norm_point, reduce_vertices
from supportlab.models.body import BodyKind, ConvexBody

DYKSTRA = Settings(projector="dykstra")


@pytest.fixture
def half_disc():
    return ConvexBody.ballcut([0.0, 0.0], 1.0, [[1.0, 0.0]], [0.0], label="half-disc")


class TestBallCut:
    def test_support_exact_by_flats(self, half_disc):
        values = strategy_for(BodyKind.BALLCUT).support(half_disc, np.array([[1.0, 0.0], [0.0, 1.0]]), Settings())
        assert values.exact
        np.testing.assert_allclose(values.lo, [0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(values.points[1], [0.0, 1.0], atol=1e-12)

    def test_projection(self, half_disc):
        P = strategy_for(BodyKind.BALLCUT).project(half_disc, np.array([[2.0, 0.0], [1.0, 1.0], [-3.0, 0.0]]),
                                                   Settings())
        np.testing.assert_allclose(P, [[0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]], atol=1e-9)

    def test_dykstra_agrees_with_flats(self, half_disc):
        X = np.array([[2.0, 0.5], [0.5, -2.0], [-2.0, 2.0]])
        kind = strategy_for(BodyKind.BALLCUT)
        np.testing.assert_allclose(kind.project(half_disc, X, DYKSTRA), kind.project(half_disc, X, Settings()),
                                   atol=1e-6)

    def test_dykstra_support_brackets(self, half_disc):
        s = 1.0 / math.sqrt(2.0)
        values = strategy_for(BodyKind.BALLCUT).support(half_disc, np.array([[s, s]]), DYKSTRA)
        # h(u) = s for the half disc: the maximiser is (0, 1).
        assert values.lo[0] <= s + 1e-9
        assert values.hi[0] >= s - 1e-9

    def test_empty_cut(self):
        with pytest.raises(InvalidBody):
            ConvexBody.ballcut([0.0, 0.0], 1.0, [[1.0, 0.0]], [-2.0])


class TestHPolytope:
    def test_vertices(self):
        body = ConvexBody.hpolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 2, 0])
        V = strategy_for(body.kind).vertices(body)
        assert sorted(map(tuple, np.round(V, 12))) == [(-1.0, 0.0), (-1.0, 2.0), (1.0, 0.0), (1.0, 2.0)]

    def test_unbounded(self):
        with pytest.raises(InvalidBody, match="unbounded"):
            ConvexBody.hpolytope([[1, 0], [-1, 0], [0, 1]], [1, 1, 1])

    def test_empty(self):
        with pytest.raises(InvalidBody, match="empty"):
            ConvexBody.hpolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [-1, -1, 1, 1])

    def test_projection_falls_back_to_dykstra(self):
        body = ConvexBody.hpolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
        P = strategy_for(body.kind).project(body, np.array([[2.0, 2.0]]), DYKSTRA)
        np.testing.assert_allclose(P, [[1.0, 1.0]], atol=1e-8)


class TestVPolytope:
    def test_reduce_vertices_drops_interior_and_duplicates(self):
        points = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [1, 0]], dtype=float)
        np.testing.assert_allclose(reduce_vertices(points), [[0, 0], [0, 1], [1, 0], [1, 1]])

    def test_reduce_collinear(self):
        points = np.array([[0, 0], [1, 1], [2, 2]], dtype=float)
        np.testing.assert_allclose(reduce_vertices(points), [[0, 0], [2, 2]])

    def test_min_norm_point(self):
        x, weights = min_norm_point(np.array([[1.0, -1.0], [1.0, 1.0], [3.0, 0.0]]))
        np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
        assert weights.sum() == pytest.approx(1.0)
        assert weights[2] == pytest.approx(0.0)

    def test_vertex_cap(self):
        angles = np.linspace(0.0, 2.0 * math.pi, 80, endpoint=False)
        with pytest.raises(InvalidBody):
            ConvexBody.vpolytope(np.column_stack([np.cos(angles), np.sin(angles)]))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            strategy_for("cylinder")
