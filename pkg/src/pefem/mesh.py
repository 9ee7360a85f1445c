"""Affine triangular meshes of the experimental domains.

Generators produce meshes whose boundary vertices lie exactly on the true
curved boundary, so the gap between the polygonal and true boundaries
shrinks like the square of the mesh size.  A line-oriented text format is
provided so externally generated meshes can be used as well.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import MeshFormatError

MIN_ANGLE_DEG = 20.0


@dataclass
class Mesh:
    """Conforming triangulation with tagged boundary edges.

    boundary_edges holds (v0, v1, adjacent_triangle, curve_id) tuples; the
    adjacent triangle is the unique element whose closure contains the edge.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: list
    _h: float = field(default=None, repr=False, compare=False)
    _edge_normals: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def h(self):
        """Largest triangle diameter (= longest edge)."""
        if self._h is None:
            tri_pts = self.vertices[self.triangles]
            lengths = [
                np.linalg.norm(tri_pts[:, i] - tri_pts[:, j], axis=1)
                for i, j in ((0, 1), (1, 2), (2, 0))
            ]
            self._h = float(np.max(lengths))
        return self._h

    @property
    def edge_normals(self):
        """Outward unit normal per boundary edge (piecewise constant)."""
        if self._edge_normals is None:
            normals = np.empty((len(self.boundary_edges), 2))
            for i, (v0, v1, tri, _cid) in enumerate(self.boundary_edges):
                e = self.vertices[v1] - self.vertices[v0]
                n = np.array([e[1], -e[0]]) / np.linalg.norm(e)
                mid = 0.5 * (self.vertices[v0] + self.vertices[v1])
                centroid = self.vertices[self.triangles[tri]].mean(axis=0)
                if np.dot(n, mid - centroid) < 0:
                    n = -n
                normals[i] = n
            self._edge_normals = normals
        return self._edge_normals

    def min_angle_deg(self):
        """Smallest interior angle over all triangles, in degrees."""
        pts = self.vertices[self.triangles]
        worst = 180.0
        for i in range(3):
            a = pts[:, (i + 1) % 3] - pts[:, i]
            b = pts[:, (i + 2) % 3] - pts[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
            worst = min(worst, float(ang.min()))
        return worst


def _edge_counts(triangles):
    """Map sorted vertex pair -> list of adjacent triangle indices."""
    edges = {}
    for t, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            edges.setdefault((min(u, v), max(u, v)), []).append(t)
    return edges


def _boundary_edges_from_triangulation(vertices, triangles, classify):
    """Extract single-triangle edges and tag them via `classify(midpoint)`."""
    out = []
    for (u, v), tris in _edge_counts(triangles).items():
        if len(tris) == 1:
            mid = 0.5 * (vertices[u] + vertices[v])
            out.append((u, v, tris[0], classify(mid)))
    out.sort(key=lambda e: (e[3], e[0], e[1]))
    return out


def _orient_ccw(vertices, triangles):
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    flipped = triangles.copy()
    flipped[det < 0] = flipped[det < 0][:, [0, 2, 1]]
    return flipped


def generate_disk_mesh(n_boundary):
    """Mesh the unit disk with boundary vertices on the unit circle.

    Vertices are laid out on concentric rings whose point counts grow in
    proportion to the radius; the ring point cloud is then triangulated.
    """
    if n_boundary < 8:
        raise ValueError("n_boundary must be at least 8")
    chord = 2.0 * math.sin(math.pi / n_boundary)
    # Interior point spacing slightly below the boundary chord keeps the
    # boundary chords the longest edges, and sqrt(3)/2 radial-to-angular
    # spacing gives near-equilateral triangles.
    fine = 0.7
    n_rings = max(2, math.ceil(2.0 / (math.sqrt(3.0) * fine * chord)))
    pts = [(0.0, 0.0)]
    for j in range(1, n_rings + 1):
        r = j / n_rings
        n_j = n_boundary if j == n_rings else max(4, round(n_boundary * r / fine))
        # Stagger alternate rings for better element shapes.
        offset = 0.0 if j % 2 == 0 else math.pi / n_j
        theta = 2.0 * math.pi * np.arange(n_j) / n_j + offset
        pts.extend(zip(r * np.cos(theta), r * np.sin(theta)))
    vertices = np.array(pts)
    triangles = _orient_ccw(vertices, Delaunay(vertices).simplices)
    boundary = _boundary_edges_from_triangulation(
        vertices, triangles, lambda mid: "circle"
    )
    return Mesh(vertices, triangles, boundary)


def generate_square_hole_mesh(n_refine):
    """Mesh the unit square minus the radius-1/4 concentric disk.

    The coarse mesh places sixteen vertices on the circle and sixteen on
    the square and joins them radially; refinement splits every triangle at
    the edge midpoints, reprojecting new inner-boundary vertices to the
    circle so every refinement level keeps its boundary vertices exact.
    """
    if n_refine < 0:
        raise ValueError("n_refine must be nonnegative")
    # Three rings of 16 directions each: the circle, an intermediate ring,
    # and the square (corners sit at odd multiples of 22.5 degrees).
    angles = np.pi / 8.0 * np.arange(16)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    inner = 0.25 * dirs
    middle = 0.375 * dirs
    outer = 0.5 * dirs / np.max(np.abs(dirs), axis=1, keepdims=True)
    vertices = np.vstack([inner, middle, outer])
    triangles = []
    for ring in (0, 16):
        for i in range(16):
            j = (i + 1) % 16
            triangles.append([ring + i, ring + 16 + i, ring + 16 + j])
            triangles.append([ring + i, ring + 16 + j, ring + j])
    triangles = _orient_ccw(vertices, np.array(triangles))

    for _ in range(n_refine):
        vertices, triangles = _refine_once(vertices, triangles)
    boundary = _boundary_edges_from_triangulation(
        vertices, triangles, lambda mid: "hole" if np.linalg.norm(mid) < 0.375 else "square"
    )
    return Mesh(vertices, np.asarray(triangles), boundary)


def _refine_once(vertices, triangles):
    """Uniform midpoint subdivision; hole-boundary midpoints reprojected."""
    edge_tris = _edge_counts(triangles)
    verts = list(map(tuple, vertices))
    midpoint_index = {}
    for (u, v), tris in edge_tris.items():
        mid = 0.5 * (vertices[u] + vertices[v])
        if len(tris) == 1 and np.linalg.norm(mid) < 0.375:
            mid = 0.25 * mid / np.linalg.norm(mid)
        midpoint_index[(u, v)] = len(verts)
        verts.append(tuple(mid))
    new_tris = []
    for a, b, c in triangles:
        mab = midpoint_index[(min(a, b), max(a, b))]
        mbc = midpoint_index[(min(b, c), max(b, c))]
        mca = midpoint_index[(min(c, a), max(c, a))]
        new_tris.extend([[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]])
    return np.array(verts), np.array(new_tris)


def generate_square_mesh(n, center=(0.0, 0.0), half_width=0.5):
    """Structured triangulation of a square; its boundary is exactly straight.

    Useful as the degenerate-geometry case where the polygonal and true
    boundaries coincide.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cx, cy = center
    coords = np.linspace(-half_width, half_width, n + 1)
    xx, yy = np.meshgrid(coords + cx, coords + cy, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    triangles = []
    for i in range(n):
        for j in range(n):
            v00 = i * (n + 1) + j
            v10 = (i + 1) * (n + 1) + j
            triangles.append([v00, v10, v10 + 1])
            triangles.append([v00, v10 + 1, v00 + 1])
    triangles = _orient_ccw(vertices, np.array(triangles))
    boundary = _boundary_edges_from_triangulation(
        vertices, triangles, lambda mid: "square"
    )
    return Mesh(vertices, triangles, boundary)


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations


def validate(mesh, geometry=None, min_angle_deg=MIN_ANGLE_DEG):
    """Check mesh invariants; the report lists violations with indices."""
    v = []
    verts, tris = mesh.vertices, mesh.triangles

    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    areas = 0.5 * (
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )
    for t in np.nonzero(areas <= 0)[0]:
        v.append(f"triangle {t}: nonpositive signed area {areas[t]:.3e}")

    edge_tris = _edge_counts(tris)
    tagged = {(min(e[0], e[1]), max(e[0], e[1])): e for e in mesh.boundary_edges}
    for (u, w), adj in edge_tris.items():
        if len(adj) > 2:
            v.append(f"edge ({u},{w}): shared by {len(adj)} triangles")
        elif len(adj) == 1 and (u, w) not in tagged:
            v.append(f"edge ({u},{w}): boundary edge missing a tag")
        elif len(adj) == 2 and (u, w) in tagged:
            v.append(f"edge ({u},{w}): interior edge tagged as boundary")
    for (u, w), e in tagged.items():
        adj = edge_tris.get((u, w))
        if adj is None:
            v.append(f"edge ({u},{w}): tagged edge absent from triangulation")
        elif len(adj) == 1 and e[2] != adj[0]:
            v.append(f"edge ({u},{w}): wrong adjacent triangle {e[2]} != {adj[0]}")

    by_component = {}
    for v0, v1, _t, cid in mesh.boundary_edges:
        by_component.setdefault(cid, []).append((v0, v1))
    for cid, edges in by_component.items():
        degree = {}
        for v0, v1 in edges:
            degree[v0] = degree.get(v0, 0) + 1
            degree[v1] = degree.get(v1, 0) + 1
        bad = [vid for vid, d in degree.items() if d != 2]
        if bad:
            v.append(f"component {cid!r}: open boundary loop at vertices {bad}")

    if geometry is not None:
        for v0, v1, _t, cid in mesh.boundary_edges:
            comp = geometry.component(cid)
            for vid in (v0, v1):
                phi = float(comp.level_set(verts[vid, 0], verts[vid, 1]))
                if abs(phi) > 1e-10:
                    v.append(
                        f"vertex {vid}: off true boundary {cid!r} (phi = {phi:.3e})"
                    )

    worst = mesh.min_angle_deg()
    if worst < min_angle_deg:
        v.append(f"minimum angle {worst:.2f} deg below {min_angle_deg} deg")

    normals = mesh.edge_normals
    for i, (v0, v1, tri, _cid) in enumerate(mesh.boundary_edges):
        n = normals[i]
        if abs(np.linalg.norm(n) - 1.0) > 1e-14:
            v.append(f"boundary edge {i}: normal not unit length")
        mid = 0.5 * (verts[v0] + verts[v1])
        centroid = verts[tris[tri]].mean(axis=0)
        if np.dot(n, mid - centroid) <= 0:
            v.append(f"boundary edge {i}: normal points inward")
    return ValidationReport(v)


def write_mesh(mesh):
    """Serialize to the line-oriented text format (round-trip exact)."""
    lines = ["pefem-mesh v1"]
    lines.append(f"vertices {len(mesh.vertices)}")
    lines.extend(f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices)
    lines.append(f"triangles {len(mesh.triangles)}")
    lines.extend(f"{a} {b} {c}" for a, b, c in mesh.triangles)
    lines.append(f"boundary_edges {len(mesh.boundary_edges)}")
    lines.extend(f"{v0} {v1} {t} {cid}" for v0, v1, t, cid in mesh.boundary_edges)
    return "\n".join(lines) + "\n"


def read_mesh(text):
    """Parse the text format produced by write_mesh."""
    numbered = [
        (i + 1, line.split("#", 1)[0].strip())
        for i, line in enumerate(text.splitlines())
    ]
    lines = [(n, s) for n, s in numbered if s]
    if not lines:
        raise MeshFormatError("empty mesh file")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise MeshFormatError("unexpected end of file", lines[-1][0])
        n, s = lines[pos]
        pos += 1
        return n, s

    n, header = take()
    if header != "pefem-mesh v1":
        raise MeshFormatError(f"bad header {header!r}", n)

    def section(name):
        n, s = take()
        parts = s.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected section header '{name} N'", n)
        try:
            return int(parts[1])
        except ValueError:
            raise MeshFormatError(f"bad count in section {name!r}", n)

    nv = section("vertices")
    verts = []
    for _ in range(nv):
        n, s = take()
        parts = s.split()
        if len(parts) != 2:
            raise MeshFormatError("vertex line needs two coordinates", n)
        try:
            verts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshFormatError("bad vertex coordinate", n)

    nt = section("triangles")
    tris = []
    for _ in range(nt):
        n, s = take()
        parts = s.split()
        if len(parts) != 3:
            raise MeshFormatError("triangle line needs three indices", n)
        try:
            tri = tuple(int(p) for p in parts)
        except ValueError:
            raise MeshFormatError("bad triangle index", n)
        if not all(0 <= i < nv for i in tri):
            raise MeshFormatError("triangle index out of range", n)
        tris.append(tri)

    nb = section("boundary_edges")
    edges = []
    for _ in range(nb):
        n, s = take()
        parts = s.split()
        if len(parts) != 4:
            raise MeshFormatError("boundary edge line needs 4 fields", n)
        try:
            edges.append((int(parts[0]), int(parts[1]), int(parts[2]), parts[3]))
        except ValueError:
            raise MeshFormatError("bad boundary edge field", n)

    if pos != len(lines):
        raise MeshFormatError("trailing content after sections", lines[pos][0])
    return Mesh(np.array(verts), np.array(tris, dtype=int), edges)
