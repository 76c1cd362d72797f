import math

import numpy as np
import pytest

from wedgelab.geometry import (
    GeometryError,
    PolarPoint,
    Region,
    classify_point,
    delta_dist,
    export_mesh,
    from_polar,
    generate_mesh,
    generate_nonobtuse_mesh,
    make_wedge,
    max_interior_angle,
    refine_regular,
    sector,
    to_polar,
    triangle_areas,
    validate_mesh,
)

PI = math.pi


class TestWedge:
    def test_straight_wall_example(self):
        w = make_wedge(-PI / 4, 3 * PI / 4)
        assert w.opening == pytest.approx(PI)

    def test_symmetric_half_plane(self):
        w = make_wedge(-PI / 2, PI / 2)
        assert w.opening == pytest.approx(PI)

    def test_opening_of_two_pi_rejected(self):
        with pytest.raises(GeometryError):
            make_wedge(-0.1, 6.2)

    def test_sign_constraints(self):
        with pytest.raises(GeometryError):
            make_wedge(0.1, 1.0)
        with pytest.raises(GeometryError):
            make_wedge(-1.0, -0.1)

    def test_sector_radius_positive(self):
        with pytest.raises(GeometryError):
            sector(-PI / 4, PI / 4, 0.0)


class TestClassify:
    @pytest.fixture
    def dom(self):
        return sector(-PI / 4, 3 * PI / 4, 1.0)

    def test_upper_subdomain(self, dom):
        assert classify_point(dom, (0.5, 0.5)) is Region.OMEGA_PLUS

    def test_interface(self, dom):
        assert classify_point(dom, (0.5, 0.0)) is Region.INTERFACE

    def test_edge(self, dom):
        assert classify_point(dom, (0.0, 0.0)) is Region.EDGE

    def test_wall_and_outside(self, dom):
        c = math.cos(3 * PI / 4)
        s = math.sin(3 * PI / 4)
        assert classify_point(dom, (0.5 * c, 0.5 * s)) is Region.WALL
        assert classify_point(dom, (2.0, 0.5)) is Region.OUTSIDE
        assert classify_point(dom, (0.5, -0.51)) is Region.OUTSIDE

    def test_arc_is_wall(self, dom):
        assert classify_point(dom, (0.0, 1.0)) is Region.WALL

    def test_partition_is_single_valued_and_polar_consistent(self, dom):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-1.2, 1.2, size=(400, 2))
        for p in pts:
            label = classify_point(dom, p)
            assert label in Region
            rt = from_polar(to_polar(p))
            assert classify_point(dom, rt) is label

    def test_negative_tolerance_rejected(self, dom):
        with pytest.raises(GeometryError):
            classify_point(dom, (0.5, 0.5), tol=-1.0)


class TestPolar:
    @pytest.mark.parametrize(
        "p,r,theta",
        [
            ((1.0, 0.0), 1.0, 0.0),
            ((0.0, 1.0), 1.0, PI / 2),
            ((-1.0, -1.0), math.sqrt(2.0), -3 * PI / 4),
        ],
    )
    def test_known_points(self, p, r, theta):
        pp = to_polar(p)
        assert pp.r == pytest.approx(r)
        assert pp.theta == pytest.approx(theta)

    def test_origin_angle_convention(self):
        assert to_polar((0.0, 0.0)).theta == 0.0

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        for p in rng.normal(size=(200, 2)):
            q = from_polar(to_polar(p))
            assert np.allclose(q, p, atol=1e-12)

    def test_negative_radius_rejected(self):
        with pytest.raises(GeometryError):
            PolarPoint(-1.0, 0.0)


class TestDelta:
    def test_interior_point(self):
        assert delta_dist((0.3, 0.0)) == pytest.approx(0.3)

    def test_capped_at_one(self):
        assert delta_dist((3.0, 4.0)) == 1.0

    def test_origin(self):
        assert delta_dist((0.0, 0.0)) == 0.0


class TestGenerateMesh:
    @pytest.fixture
    def dom(self):
        return sector(-PI / 4, 3 * PI / 4, 1.0)

    def test_structural(self, dom):
        mesh = generate_mesh(dom, 0.25, 1.0)
        validate_mesh(mesh, dom)
        assert set(np.unique(mesh.region)) == {-1, 1}
        # interface edges lie on theta = 0
        for u, v in mesh.interface_edges:
            assert abs(mesh.vertices[u, 1]) < 1e-14
            assert abs(mesh.vertices[v, 1]) < 1e-14

    def test_graded_layer_radii(self, dom):
        # layer formula r_i = R (i/N)^(1/mu) evaluated directly
        mesh = generate_mesh(dom, 0.25, 0.5)
        radii = np.unique(np.round(np.hypot(*mesh.vertices.T), 12))
        n = 4
        expected = np.concatenate([[0.0], (np.arange(1, n + 1) / n) ** 2.0])
        assert np.allclose(radii, expected, atol=1e-12)

    def test_vertex_growth_under_halving(self, dom):
        n1 = generate_mesh(dom, 0.1, 1.0).n_vertices
        n2 = generate_mesh(dom, 0.05, 1.0).n_vertices
        assert 3.2 < n2 / n1 < 4.8

    def test_grading_monotone_and_bounded_for_uniform(self, dom):
        mesh = generate_mesh(dom, 0.1, 1.0)
        radii = np.unique(np.round(np.hypot(*mesh.vertices.T), 12))
        radii = radii[radii > 0]
        assert np.all(np.diff(radii) > 0)
        assert np.all(radii[1:] / radii[:-1] <= 2.0 + 1e-12)

    def test_conformity_interior_edges_shared_twice(self, dom):
        mesh = generate_mesh(dom, 0.2, 1.0)
        from wedgelab.geometry import _edge_counts

        counts = _edge_counts(mesh.triangles)
        assert set(counts.values()) <= {1, 2}
        for (u, v), c in counts.items():
            if c == 1:
                assert mesh.boundary[u] and mesh.boundary[v]

    def test_interface_fit(self, dom):
        mesh = generate_mesh(dom, 0.15, 0.7)
        y = mesh.vertices[:, 1][mesh.triangles]
        assert not np.any(np.any(y > 1e-13, axis=1) & np.any(y < -1e-13, axis=1))

    def test_rejects_bad_parameters(self, dom):
        with pytest.raises(GeometryError):
            generate_mesh(dom, 1.5, 1.0)  # h >= R
        with pytest.raises(GeometryError):
            generate_mesh(dom, 0.1, 0.0)
        with pytest.raises(GeometryError):
            generate_mesh(dom, 0.1, 1.5)

    def test_positive_orientation(self, dom):
        mesh = generate_mesh(dom, 0.2, 0.6)
        assert np.all(triangle_areas(mesh.vertices, mesh.triangles) > 0)

    def test_reflex_wedge(self):
        dom = sector(-3 * PI / 4, 2 * PI / 3, 1.0)
        mesh = generate_mesh(dom, 0.2, 1.0)
        validate_mesh(mesh, dom)


class TestNonObtuse:
    def test_max_angle_at_most_right(self):
        dom = sector(-PI / 4, 3 * PI / 4, 1.0)
        mesh = generate_nonobtuse_mesh(dom, levels=3)
        validate_mesh(mesh, dom)
        assert max_interior_angle(mesh) <= PI / 2 + 1e-12

    def test_reflex_wedge_stays_nonobtuse(self):
        dom = sector(-3 * PI / 4, 2 * PI / 3, 1.0)
        mesh = generate_nonobtuse_mesh(dom, levels=2)
        assert max_interior_angle(mesh) <= PI / 2 + 1e-12

    def test_refinement_quarters_triangles(self):
        dom = sector(-PI / 3, PI / 3, 1.0)
        coarse = generate_nonobtuse_mesh(dom, levels=1)
        fine = refine_regular(coarse)
        assert fine.n_triangles == 4 * coarse.n_triangles
        validate_mesh(fine, dom)


class TestExport:
    def test_format(self, tmp_path):
        dom = sector(-PI / 4, PI / 2, 1.0)
        mesh = generate_mesh(dom, 0.4, 1.0)
        path = tmp_path / "mesh.txt"
        export_mesh(mesh, path)
        lines = path.read_text().splitlines()
        nv = int(lines[0].split()[1])
        assert lines[0] == f"vertices {mesh.n_vertices}"
        for ln in lines[1 : 1 + nv]:
            x, y, flag = ln.split()
            float(x), float(y)
            assert flag in ("0", "1")
        header = lines[1 + nv]
        assert header == f"triangles {mesh.n_triangles}"
        for ln in lines[2 + nv :]:
            i, j, k, tag = ln.split()
            assert tag in ("+", "-")
            assert max(int(i), int(j), int(k)) < mesh.n_vertices
