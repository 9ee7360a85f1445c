"""Lagrange elements, quadrature, dof management, and standard assembly.

The reference basis is evaluable at arbitrary points of the plane, inside
or outside the reference triangle: extrapolating an element's polynomial
past its own edges is exactly what the boundary terms of the method need.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import roots_jacobi

from .errors import AssemblyError, SingularElementError


# ---------------------------------------------------------------------------
# reference element


class ReferenceElement:
    """P_k Lagrange element on the unit reference triangle.

    Nodes are the equispaced lattice {(i/k, j/k) : i, j >= 0, i + j <= k}.
    The basis is stored in monomial form (coefficients solve the Vandermonde
    system), so values and gradients are defined at any point of the plane.
    """

    def __init__(self, degree):
        if not 1 <= degree <= 4:
            raise ValueError("degree must be between 1 and 4")
        self.degree = degree
        self.exponents = [
            (a, b) for total in range(degree + 1) for a in range(total, -1, -1)
            for b in (total - a,)
        ]
        lattice = []
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                lattice.append((i, j))
        # Order nodes: vertices, then edge nodes, then interior (see below).
        self.node_lattice = lattice
        self.nodes = np.array(lattice, dtype=float) / degree
        vand = self._monomials(self.nodes)
        self.coeffs = np.linalg.solve(vand, np.eye(len(lattice)))

    @property
    def n_basis(self):
        return len(self.nodes)

    def _monomials(self, points):
        pts = np.atleast_2d(points)
        cols = [pts[:, 0] ** a * pts[:, 1] ** b for a, b in self.exponents]
        return np.column_stack(cols)

    def _monomial_gradients(self, points):
        pts = np.atleast_2d(points)
        gx = np.column_stack(
            [
                a * pts[:, 0] ** max(a - 1, 0) * pts[:, 1] ** b if a else np.zeros(len(pts))
                for a, b in self.exponents
            ]
        )
        gy = np.column_stack(
            [
                b * pts[:, 0] ** a * pts[:, 1] ** max(b - 1, 0) if b else np.zeros(len(pts))
                for a, b in self.exponents
            ]
        )
        return gx, gy

    def eval(self, points):
        """Basis values and gradients at arbitrary reference points.

        Returns (values, gradients) with shapes (n_pts, n_basis) and
        (n_pts, n_basis, 2).  No clamping to the simplex is performed.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        values = self._monomials(pts) @ self.coeffs
        gx, gy = self._monomial_gradients(pts)
        grads = np.stack([gx @ self.coeffs, gy @ self.coeffs], axis=-1)
        return values, grads


@lru_cache(maxsize=8)
def reference_element(degree):
    return ReferenceElement(degree)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Points/weights on the reference triangle and on the segment [0, 1]."""

    triangle_points: np.ndarray
    triangle_weights: np.ndarray
    segment_points: np.ndarray
    segment_weights: np.ndarray


def triangle_quadrature(exact_degree):
    """Conical-product rule on the reference triangle.

    Exact for all polynomials of total degree <= exact_degree; all weights
    positive.
    """
    n = (exact_degree + 2) // 2 + 1
    # Legendre on [0,1] for the first coordinate.
    x_gl, w_gl = np.polynomial.legendre.leggauss(n)
    x_gl = 0.5 * (x_gl + 1.0)
    w_gl = 0.5 * w_gl
    # Jacobi weight (1 - y) on [0,1] for the collapsed coordinate.
    x_gj, w_gj = roots_jacobi(n, 1.0, 0.0)
    x_gj = 0.5 * (x_gj + 1.0)
    w_gj = 0.25 * w_gj
    pts = []
    wts = []
    for xv, wv in zip(x_gj, w_gj):
        for xu, wu in zip(x_gl, w_gl):
            pts.append((xu * (1.0 - xv), xv))
            wts.append(wu * wv)
    return np.array(pts), np.array(wts)


def segment_quadrature(n_points):
    """Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


def quadrature_for_degree(k):
    """Default rules: triangle exact to 2k+2, segment with k+2 points."""
    tp, tw = triangle_quadrature(2 * k + 2)
    sp_, sw = segment_quadrature(k + 2)
    return QuadratureRule(tp, tw, sp_, sw)


# ---------------------------------------------------------------------------
# affine maps


def affine_map(vertices):
    """Affine map from the reference triangle onto a physical triangle.

    Returns (B, b, det, Binv) with x = B xi + b and det = det(B) > 0.
    """
    v = np.asarray(vertices, dtype=float)
    B = np.column_stack([v[1] - v[0], v[2] - v[0]])
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    size = max(np.linalg.norm(v[1] - v[0]), np.linalg.norm(v[2] - v[0]))
    if abs(det) <= 1e-14 * size**2:
        raise SingularElementError(f"degenerate triangle with vertices {v.tolist()}")
    Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det
    return B, v[0], det, Binv


# ---------------------------------------------------------------------------
# finite element space


class FeSpace:
    """Global P_k space on a mesh: dof numbering and boundary dof sets.

    Dof order: mesh vertices first, then (k-1) dofs per mesh edge (oriented
    from the lower- to the higher-numbered vertex), then interior dofs
    element by element.
    """

    def __init__(self, mesh, degree):
        self.mesh = mesh
        self.degree = degree
        self.ref = reference_element(degree)
        k = degree
        nv = len(mesh.vertices)

        edge_ids = {}
        for tri in mesh.triangles:
            for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(u, v), max(u, v))
                if key not in edge_ids:
                    edge_ids[key] = len(edge_ids)
        ne = len(edge_ids)
        n_int = (k - 1) * (k - 2) // 2
        self.n_dofs = nv + (k - 1) * ne + n_int * len(mesh.triangles)

        # Local classification of reference lattice nodes.
        # Local edges: 0 = (v0,v1) [j==0], 1 = (v1,v2) [i+j==k], 2 = (v2,v0) [i==0].
        local_kind = []
        for i, j in self.ref.node_lattice:
            if (i, j) == (0, 0):
                local_kind.append(("vertex", 0))
            elif (i, j) == (k, 0):
                local_kind.append(("vertex", 1))
            elif (i, j) == (0, k):
                local_kind.append(("vertex", 2))
            elif j == 0:
                local_kind.append(("edge", 0, i))
            elif i + j == k:
                local_kind.append(("edge", 1, j))
            elif i == 0:
                local_kind.append(("edge", 2, k - j))
            else:
                local_kind.append(("interior",))
        self._local_kind = local_kind
        local_edge_vertices = ((0, 1), (1, 2), (2, 0))

        n_interior_seen = 0
        cell_dofs = np.empty((len(mesh.triangles), self.ref.n_basis), dtype=int)
        for t, tri in enumerate(mesh.triangles):
            n_local_interior = 0
            for loc, kind in enumerate(local_kind):
                if kind[0] == "vertex":
                    cell_dofs[t, loc] = tri[kind[1]]
                elif kind[0] == "edge":
                    le, s = kind[1], kind[2]
                    a, b = tri[local_edge_vertices[le][0]], tri[local_edge_vertices[le][1]]
                    key = (min(a, b), max(a, b))
                    pos = s if a < b else k - s
                    cell_dofs[t, loc] = nv + edge_ids[key] * (k - 1) + (pos - 1)
                else:
                    cell_dofs[t, loc] = (
                        nv + (k - 1) * ne + t * n_int + n_local_interior
                    )
                    n_local_interior += 1
            n_interior_seen += n_local_interior
        self.cell_dofs = cell_dofs
        self._edge_ids = edge_ids

        coords = np.empty((self.n_dofs, 2))
        for t, tri in enumerate(mesh.triangles):
            B, b0, _det, _Binv = affine_map(mesh.vertices[tri])
            coords[cell_dofs[t]] = self.ref.nodes @ B.T + b0
        self.dof_coords = coords

        bdofs = []
        seen = set()
        for v0, v1, tri_idx, _cid in mesh.boundary_edges:
            for d in self.edge_dofs(v0, v1):
                if d not in seen:
                    seen.add(d)
                    bdofs.append(d)
        self.boundary_dofs = np.array(sorted(bdofs), dtype=int)
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        self.interior_dofs = np.nonzero(mask)[0]

    def edge_dofs(self, v0, v1):
        """Global dofs whose nodes lie on the mesh edge (v0, v1), in order
        from the edge's lower-numbered vertex."""
        k = self.degree
        key = (min(v0, v1), max(v0, v1))
        eid = self._edge_ids.get(key)
        if eid is None:
            raise KeyError(f"({v0}, {v1}) is not a mesh edge")
        nv = len(self.mesh.vertices)
        return [key[0]] + [
            nv + eid * (k - 1) + s for s in range(k - 1)
        ] + [key[1]]

    def local_edge_nodes(self, tri_idx, v0, v1):
        """Local basis indices of `tri_idx` whose nodes lie on edge (v0, v1)."""
        tri = self.mesh.triangles[tri_idx]
        local_edge_vertices = ((0, 1), (1, 2), (2, 0))
        which = None
        for le, (a, b) in enumerate(local_edge_vertices):
            if {tri[a], tri[b]} == {v0, v1}:
                which = le
                break
        if which is None:
            raise KeyError(f"edge ({v0}, {v1}) not on triangle {tri_idx}")
        out = []
        for loc, kind in enumerate(self._local_kind):
            if kind[0] == "vertex" and tri[kind[1]] in (v0, v1):
                out.append(loc)
            elif kind[0] == "edge" and kind[1] == which:
                out.append(loc)
        return out


# ---------------------------------------------------------------------------
# evaluation and assembly


def eval_fe(space, coefficients, element, points):
    """Evaluate a finite element function's element polynomial anywhere.

    The element's polynomial is evaluated at the given physical points,
    which may lie outside the element: this is the polynomial extension.
    Returns (values, gradients).
    """
    mesh = space.mesh
    B, b0, _det, Binv = affine_map(mesh.vertices[mesh.triangles[element]])
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref_pts = (pts - b0) @ Binv.T
    vals, grads = space.ref.eval(ref_pts)
    local = np.asarray(coefficients)[space.cell_dofs[element]]
    values = vals @ local
    gradients = np.einsum("pbd,b->pd", grads @ Binv, local)
    scalar = np.asarray(points).ndim == 1
    return (values[0], gradients[0]) if scalar else (values, gradients)


def _geometry_arrays(space):
    """Vectorized affine data for all elements: B, det, Binv."""
    v = space.mesh.vertices[space.mesh.triangles]
    B = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    if np.any(det <= 0):
        bad = int(np.argmin(det))
        raise SingularElementError(f"element {bad} has nonpositive Jacobian")
    Binv = np.empty_like(B)
    Binv[:, 0, 0] = B[:, 1, 1]
    Binv[:, 0, 1] = -B[:, 0, 1]
    Binv[:, 1, 0] = -B[:, 1, 0]
    Binv[:, 1, 1] = B[:, 0, 0]
    Binv /= det[:, None, None]
    return v[:, 0], B, det, Binv


def assemble_operator(space, p=None, q=None, form="D", quadrature=None):
    """Assemble the stiffness form (form="D") or stiffness+mass (form="N").

    p multiplies the gradient term, q the mass term (form "N" only); both
    are vectorized callables (x, y) -> values, defaulting to 1.
    """
    if form not in ("D", "N"):
        raise ValueError("form must be 'D' or 'N'")
    rule = quadrature or quadrature_for_degree(space.degree)
    ref_vals, ref_grads = space.ref.eval(rule.triangle_points)
    origin, B, det, Binv = _geometry_arrays(space)
    # Physical quadrature points, shape (n_elem, n_q, 2).
    x = np.einsum("qd,med->mqe", rule.triangle_points, B) + origin[:, None, :]

    p_fun = p if p is not None else (lambda xx, yy: np.ones_like(xx))
    pv = _eval_field(p_fun, x, "diffusion coefficient")
    # Gradients pushed to physical space: (n_elem, n_q, n_basis, 2).
    gphys = np.einsum("qbd,mde->mqbe", ref_grads, Binv)
    w = rule.triangle_weights[None, :] * det[:, None]
    local = np.einsum("mq,mq,mqbe,mqce->mbc", w, pv, gphys, gphys)
    if form == "N":
        q_fun = q if q is not None else (lambda xx, yy: np.ones_like(xx))
        qv = _eval_field(q_fun, x, "reaction coefficient")
        local += np.einsum("mq,mq,qb,qc->mbc", w, qv, ref_vals, ref_vals)

    nb = space.ref.n_basis
    rows = np.repeat(space.cell_dofs, nb, axis=1).ravel()
    cols = np.tile(space.cell_dofs, (1, nb)).ravel()
    mat = sp.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    )
    return mat.tocsr()


def _eval_field(fun, x, what):
    vals = np.asarray(fun(x[..., 0], x[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, x.shape[:-1])
    if not np.all(np.isfinite(vals)):
        bad = int(np.nonzero(~np.isfinite(vals).all(axis=-1))[0][0])
        raise AssemblyError(f"non-finite {what} value", element=bad)
    return vals


def assemble_load(space, f, quadrature=None):
    """Load vector with entries given by the volume quadrature of f."""
    rule = quadrature or quadrature_for_degree(space.degree)
    ref_vals, _ = space.ref.eval(rule.triangle_points)
    origin, B, det, _Binv = _geometry_arrays(space)
    x = np.einsum("qd,med->mqe", rule.triangle_points, B) + origin[:, None, :]
    fv = _eval_field(f, x, "source")
    w = rule.triangle_weights[None, :] * det[:, None]
    local = np.einsum("mq,mq,qb->mb", w, fv, ref_vals)
    out = np.zeros(space.n_dofs)
    np.add.at(out, space.cell_dofs.ravel(), local.ravel())
    return out
