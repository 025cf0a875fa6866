import math

import numpy as np
import pytest

from supportlab.config import Settings
from supportlab.errors import FaceEnumerationOverflow
from supportlab.faces import FaceLattice, spherical_polygon_area
from supportlab.models.body import ConvexBody

CUBE = [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)]


class TestIntrinsicVolumes:
    def test_unit_cube(self):
        np.testing.assert_allclose(FaceLattice(ConvexBody.vpolytope(CUBE)).intrinsic_volumes(), [1, 3, 3, 1],
                                   atol=1e-9)

    def test_unit_square(self):
        square = ConvexBody.vpolytope([[0, 0], [1, 0], [1, 1], [0, 1]])
        np.testing.assert_allclose(FaceLattice(square).intrinsic_volumes(), [1, 2, 1], atol=1e-12)

    def test_segment_in_the_plane(self):
        segment = ConvexBody.vpolytope([[0.0, 0.0], [2.0, 0.0]])
        np.testing.assert_allclose(FaceLattice(segment).intrinsic_volumes(), [1, 2, 0], atol=1e-12)

    def test_triangle(self):
        triangle = ConvexBody.vpolytope([[0, 0], [3, 0], [0, 4]])
        volumes = FaceLattice(triangle).intrinsic_volumes()
        assert volumes[0] == pytest.approx(1.0)
        assert volumes[1] == pytest.approx(6.0)
        assert volumes[2] == pytest.approx(6.0)

    def test_regular_tetrahedron_euler_characteristic(self):
        tetra = ConvexBody.vpolytope([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
        volumes = FaceLattice(tetra).intrinsic_volumes()
        assert volumes[0] == pytest.approx(1.0, abs=1e-9)
        assert volumes[3] == pytest.approx(8.0 / 3.0)


class TestFaces:
    def test_cube_face_counts(self):
        lattice = FaceLattice(ConvexBody.vpolytope(CUBE))
        assert [len(lattice.faces_of_dim(d)) for d in range(4)] == [8, 12, 6, 1]

    def test_normal_directions_lie_in_cone(self):
        lattice = FaceLattice(ConvexBody.vpolytope(CUBE))
        vertex = lattice.faces_of_dim(0)[0]
        U = lattice.normal_directions(vertex, 0.2)
        p = lattice.vertices[vertex.vertex_ids[0]]
        assert U.shape[0] > 1
        assert np.all(U @ (lattice.vertices - p).T <= 1e-12)

    def test_face_points_on_face(self):
        lattice = FaceLattice(ConvexBody.vpolytope(CUBE))
        facet = lattice.faces_of_dim(2)[0]
        X = lattice.face_points(facet, 0.25)
        ids = list(facet.vertex_ids)
        lo, hi = lattice.vertices[ids].min(axis=0), lattice.vertices[ids].max(axis=0)
        assert np.all((X >= lo - 1e-12) & (X <= hi + 1e-12))

    def test_rejects_non_polytope(self):
        with pytest.raises(ValueError):
            FaceLattice(ConvexBody.ball([0.0, 0.0], 1.0))

    def test_vertex_cap(self):
        angles = np.linspace(0.0, 2.0 * math.pi, 20, endpoint=False)
        polygon = ConvexBody.vpolytope(np.column_stack([np.cos(angles), np.sin(angles)]))
        with pytest.raises(FaceEnumerationOverflow):
            FaceLattice(polygon, Settings(vertex_cap=10))


class TestSphericalPolygon:
    def test_octant(self):
        # The triangle with vertices e1, e2, e3 covers an eighth of the sphere.
        assert spherical_polygon_area(np.eye(3)) == pytest.approx(4.0 * math.pi / 8.0)
