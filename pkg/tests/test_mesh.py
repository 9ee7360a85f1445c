"""Tests for mesh generation, validation, and the text format."""

import math

import numpy as np
import pytest

from pefem.errors import MeshFormatError
from pefem.geometry import disk_geometry, geometric_gap, square_hole_geometry
from pefem.mesh import (
    Mesh,
    generate_disk_mesh,
    generate_square_hole_mesh,
    generate_square_mesh,
    read_mesh,
    validate,
    write_mesh,
)


def boundary_vertex_ids(mesh, curve_id=None):
    out = set()
    for v0, v1, _tri, cid in mesh.boundary_edges:
        if curve_id is None or cid == curve_id:
            out.update((v0, v1))
    return sorted(out)


class TestDiskMesh:
    def test_boundary_vertex_count_and_radius(self):
        mesh = generate_disk_mesh(8)
        bverts = boundary_vertex_ids(mesh)
        assert len(bverts) == 8
        radii = np.linalg.norm(mesh.vertices[bverts], axis=1)
        assert np.abs(radii - 1.0).max() <= 1e-14

    def test_h_tracks_boundary_chord(self):
        # The longest edge is the boundary chord or an interior edge at
        # most a few percent longer.
        for n in (8, 16, 64):
            mesh = generate_disk_mesh(n)
            chord = 2.0 * math.sin(math.pi / n)
            assert chord - 1e-12 <= mesh.h <= 1.08 * chord

    def test_validates_against_geometry(self):
        geo = disk_geometry()
        for n in (8, 16, 32, 64):
            report = validate(generate_disk_mesh(n), geo)
            assert report.ok, report.violations

    def test_h_halves_per_level(self):
        hs = [generate_disk_mesh(n).h for n in (16, 32, 64, 128)]
        for coarse, fine in zip(hs, hs[1:]):
            assert 0.45 <= fine / coarse <= 0.55

    def test_gap_fraction_of_h_squared(self):
        # delta_h ~ h^2/8; the generators keep the ratio in a narrow band.
        geo = disk_geometry()
        for n in (16, 32, 64):
            mesh = generate_disk_mesh(n)
            ratio = geometric_gap(mesh, geo) / mesh.h**2
            assert 0.10 <= ratio <= 0.15

    def test_rejects_tiny_boundary_count(self):
        with pytest.raises(ValueError):
            generate_disk_mesh(4)


class TestSquareHoleMesh:
    def test_hole_vertices_on_circle(self):
        for level in (0, 1, 2):
            mesh = generate_square_hole_mesh(level)
            hole = boundary_vertex_ids(mesh, "hole")
            radii = np.linalg.norm(mesh.vertices[hole], axis=1)
            assert np.abs(radii - 0.25).max() <= 1e-12

    def test_square_vertices_on_square(self):
        mesh = generate_square_hole_mesh(1)
        outer = boundary_vertex_ids(mesh, "square")
        norms = np.abs(mesh.vertices[outer]).max(axis=1)
        assert np.abs(norms - 0.5).max() <= 1e-12

    def test_refinement_quadruples_triangles(self):
        counts = [len(generate_square_hole_mesh(l).triangles) for l in (0, 1, 2)]
        assert counts[1] == 4 * counts[0]
        assert counts[2] == 4 * counts[1]

    def test_h_halves_over_three_levels(self):
        h0 = generate_square_hole_mesh(0).h
        h3 = generate_square_hole_mesh(3).h
        assert 7.5 <= h0 / h3 <= 8.5

    def test_validates_against_geometry(self):
        geo = square_hole_geometry()
        for level in (0, 1, 2):
            report = validate(generate_square_hole_mesh(level), geo)
            assert report.ok, report.violations

    def test_rejects_negative_level(self):
        with pytest.raises(ValueError):
            generate_square_hole_mesh(-1)


class TestSquareMesh:
    def test_structured_counts(self):
        mesh = generate_square_mesh(4)
        assert len(mesh.vertices) == 25
        assert len(mesh.triangles) == 32
        assert validate(mesh).ok

    def test_boundary_is_straight(self):
        mesh = generate_square_mesh(3)
        for v0, v1, _tri, cid in mesh.boundary_edges:
            assert cid == "square"
            assert np.abs(mesh.vertices[[v0, v1]]).max() == pytest.approx(0.5)


class TestValidate:
    def test_detects_flipped_triangle(self):
        mesh = generate_square_mesh(2)
        tris = mesh.triangles.copy()
        tris[0] = tris[0][[0, 2, 1]]
        broken = Mesh(mesh.vertices, tris, mesh.boundary_edges)
        report = validate(broken)
        assert any("nonpositive signed area" in v for v in report.violations)

    def test_detects_missing_boundary_tag(self):
        mesh = generate_square_mesh(2)
        broken = Mesh(mesh.vertices, mesh.triangles, mesh.boundary_edges[1:])
        report = validate(broken)
        assert any("missing a tag" in v for v in report.violations)
        assert any("open boundary loop" in v for v in report.violations)

    def test_detects_wrong_adjacent_triangle(self):
        mesh = generate_square_mesh(2)
        v0, v1, tri, cid = mesh.boundary_edges[0]
        edges = [(v0, v1, tri + 1, cid)] + mesh.boundary_edges[1:]
        report = validate(Mesh(mesh.vertices, mesh.triangles, edges))
        assert any("wrong adjacent triangle" in v for v in report.violations)

    def test_detects_off_boundary_vertex(self):
        mesh = generate_disk_mesh(16)
        verts = mesh.vertices.copy()
        vid = boundary_vertex_ids(mesh)[0]
        verts[vid] *= 1.01
        report = validate(Mesh(verts, mesh.triangles, mesh.boundary_edges), disk_geometry())
        assert any("off true boundary" in v for v in report.violations)

    def test_detects_poor_angles(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.01]])
        tris = np.array([[0, 1, 2]])
        edges = [(0, 1, 0, "square"), (1, 2, 0, "square"), (0, 2, 0, "square")]
        report = validate(Mesh(verts, tris, edges))
        assert any("minimum angle" in v for v in report.violations)

    def test_outward_normals(self):
        mesh = generate_disk_mesh(16)
        for i, (v0, v1, _tri, _cid) in enumerate(mesh.boundary_edges):
            mid = 0.5 * (mesh.vertices[v0] + mesh.vertices[v1])
            # For the disk the outward direction is radial.
            assert np.dot(mesh.edge_normals[i], mid) > 0


class TestTextFormat:
    def test_round_trip_exact(self):
        mesh = generate_square_hole_mesh(1)
        back = read_mesh(write_mesh(mesh))
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)
        assert list(back.boundary_edges) == list(mesh.boundary_edges)

    def test_comments_and_blank_lines_ignored(self):
        mesh = generate_square_mesh(1)
        text = write_mesh(mesh)
        noisy = "# a comment\n\n" + text.replace(
            "pefem-mesh v1", "pefem-mesh v1  # header"
        )
        back = read_mesh(noisy)
        assert np.array_equal(back.vertices, mesh.vertices)

    def test_empty_file(self):
        with pytest.raises(MeshFormatError):
            read_mesh("")

    def test_bad_header(self):
        with pytest.raises(MeshFormatError) as err:
            read_mesh("pefem-mesh v2\nvertices 0\ntriangles 0\nboundary_edges 0\n")
        assert "bad header" in str(err.value)

    def test_count_mismatch(self):
        mesh = generate_square_mesh(1)
        text = write_mesh(mesh).replace("vertices 4", "vertices 5")
        with pytest.raises(MeshFormatError):
            read_mesh(text)

    def test_index_out_of_range(self):
        text = (
            "pefem-mesh v1\nvertices 3\n0.0 0.0\n1.0 0.0\n0.0 1.0\n"
            "triangles 1\n0 1 7\nboundary_edges 0\n"
        )
        with pytest.raises(MeshFormatError) as err:
            read_mesh(text)
        assert err.value.line == 7

    def test_error_carries_line_number(self):
        text = "pefem-mesh v1\nvertices 1\nnot-a-number 0.0\ntriangles 0\nboundary_edges 0\n"
        with pytest.raises(MeshFormatError) as err:
            read_mesh(text)
        assert err.value.line == 3
