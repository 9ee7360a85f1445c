"""Assembly of the extension-based boundary formulations.

Boundary conditions prescribed on the true curved boundary are enforced by
extrapolating each boundary element's polynomial from the polygonal edge to
the curved boundary: Dirichlet data is matched there (weakly via scaled
constraint rows, or strongly at boundary nodes), and the Neumann flux is
corrected by the difference between the extended flux on the true boundary
and the discrete flux on the polygonal one.  A classical nodal-interpolation
variant is included as the suboptimal baseline.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sparse

from .errors import AssemblyError, ConfigurationError
from .fem import quadrature_for_degree, assemble_operator, assemble_load

DEFAULT_C_THETA = 10.0


@dataclass
class ProblemSpec:
    """Coefficients, data, and (optionally) the exact solution of a problem.

    All fields are numpy-vectorized callables of physical coordinates; they
    must be evaluable on the polygonal domain as well, including the thin
    region outside the true domain (globally defined formulas do this for
    free).  g_N additionally receives the outward unit normal components.
    """

    bc_kind: str  # "dirichlet" | "neumann"
    p: Callable = None
    q: Callable = None
    f: Callable = None
    g_D: Callable = None
    g_N: Callable = None
    exact_u: Callable = None
    exact_grad: Callable = None

    def __post_init__(self):
        if self.bc_kind not in ("dirichlet", "neumann"):
            raise ConfigurationError(f"unknown bc_kind {self.bc_kind!r}")
        if self.p is None:
            self.p = lambda x, y: np.ones_like(np.asarray(x, dtype=float))
        if self.bc_kind == "neumann" and self.q is None:
            raise ConfigurationError("Neumann problems need a reaction coefficient q")


def verify_problem_consistency(problem, points, normals=None, tol=1e-10):
    """Check boundary data against the exact solution at boundary points."""
    if problem.exact_u is None:
        return
    x, y = points[:, 0], points[:, 1]
    if problem.bc_kind == "dirichlet" and problem.g_D is not None:
        err = np.abs(problem.g_D(x, y) - problem.exact_u(x, y)).max()
        if err > tol:
            raise ConfigurationError(f"g_D inconsistent with exact_u (err {err:.2e})")
    if problem.bc_kind == "neumann" and problem.g_N is not None:
        ux, uy = problem.exact_grad(x, y)
        flux = problem.p(x, y) * (ux * normals[:, 0] + uy * normals[:, 1])
        err = np.abs(problem.g_N(x, y, normals[:, 0], normals[:, 1]) - flux).max()
        if err > tol:
            raise ConfigurationError(f"g_N inconsistent with exact_u (err {err:.2e})")


@dataclass
class LinearSystem:
    """Assembled sparse system; boundary-constraint rows are recorded.

    The matrix is nonsymmetric in general: constraint rows couple a
    boundary test function to every dof of the adjacent element.
    """

    A: sparse.csr_matrix
    F: np.ndarray
    boundary_rows: np.ndarray
    theta: float = 0.0


class _BoundaryEdgeQuadrature:
    """Per-boundary-edge quadrature data shared by the assemblers."""

    def __init__(self, space, geometry, rule):
        self.space = space
        self.geometry = geometry
        self.t = rule.segment_points
        self.w = rule.segment_weights

    def __iter__(self):
        space, mesh = self.space, self.space.mesh
        for e_idx, (v0, v1, tri, cid) in enumerate(mesh.boundary_edges):
            if not 0 <= tri < len(mesh.triangles):
                raise AssemblyError(
                    f"boundary edge ({v0},{v1}) lacks a valid adjacent triangle"
                )
            a, b = mesh.vertices[v0], mesh.vertices[v1]
            length = float(np.linalg.norm(b - a))
            x_q = a + np.outer(self.t, b - a)
            eta_q = self.geometry.closest_point(x_q, cid)
            weights = self.w * length
            local_edge = space.local_edge_nodes(tri, v0, v1)
            yield _EdgeData(e_idx, v0, v1, tri, cid, x_q, eta_q, weights, local_edge)


@dataclass
class _EdgeData:
    index: int
    v0: int
    v1: int
    tri: int
    curve_id: str
    x: np.ndarray
    eta: np.ndarray
    weights: np.ndarray
    local_edge: list


def _basis_at(space, element, points):
    """Element basis values/physical gradients at physical points."""
    from .fem import affine_map

    mesh = space.mesh
    B, b0, _det, Binv = affine_map(mesh.vertices[mesh.triangles[element]])
    ref_pts = (np.atleast_2d(points) - b0) @ Binv.T
    vals, grads = space.ref.eval(ref_pts)
    return vals, grads @ Binv


def _drop_rows(matrix, rows_mask):
    coo = matrix.tocoo()
    keep = ~rows_mask[coo.row]
    return coo.row[keep], coo.col[keep], coo.data[keep]


def assemble_pefem_dirichlet(space, problem, geometry, c_theta=DEFAULT_C_THETA):
    """Weak-constraint system: boundary rows tie the extended polynomial
    on the true boundary to the Dirichlet data, scaled by c_theta / h."""
    if problem.bc_kind != "dirichlet":
        raise ConfigurationError("problem is not a Dirichlet problem")
    rule = quadrature_for_degree(space.degree)
    theta = c_theta / space.mesh.h

    stiffness = assemble_operator(space, p=problem.p, form="D", quadrature=rule)
    F = assemble_load(space, problem.f, quadrature=rule)

    is_boundary = np.zeros(space.n_dofs, dtype=bool)
    is_boundary[space.boundary_dofs] = True
    rows, cols, data = map(list, map(np.ndarray.tolist, _drop_rows(stiffness, is_boundary)))
    F = F.copy()
    F[is_boundary] = 0.0

    for edge in _BoundaryEdgeQuadrature(space, geometry, rule):
        vals_x, _ = _basis_at(space, edge.tri, edge.x)
        vals_eta, _ = _basis_at(space, edge.tri, edge.eta)
        gdofs = space.cell_dofs[edge.tri]
        test = vals_x[:, edge.local_edge]  # traces; zero off the edge
        block = theta * np.einsum("q,qi,qj->ij", edge.weights, test, vals_eta)
        test_dofs = gdofs[edge.local_edge]
        rows.extend(np.repeat(test_dofs, len(gdofs)).tolist())
        cols.extend(np.tile(gdofs, len(test_dofs)).tolist())
        data.extend(block.ravel().tolist())
        g_vals = problem.g_D(edge.eta[:, 0], edge.eta[:, 1])
        np.add.at(F, test_dofs, theta * np.einsum("q,qi,q->i", edge.weights, test, g_vals))

    A = sparse.coo_matrix(
        (data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    ).tocsr()
    return LinearSystem(A, F, space.boundary_dofs.copy(), theta)


def assemble_pefem_dirichlet_strong(space, problem, geometry):
    """Nodal-constraint system: at every boundary node the adjacent
    element's extended polynomial matches the data on the true boundary."""
    if problem.bc_kind != "dirichlet":
        raise ConfigurationError("problem is not a Dirichlet problem")
    rule = quadrature_for_degree(space.degree)
    stiffness = assemble_operator(space, p=problem.p, form="D", quadrature=rule)
    F = assemble_load(space, problem.f, quadrature=rule)

    # Each boundary dof is constrained through one adjacent boundary edge.
    owner = {}
    for v0, v1, tri, cid in space.mesh.boundary_edges:
        for d in space.edge_dofs(v0, v1):
            owner.setdefault(d, (tri, cid))

    is_boundary = np.zeros(space.n_dofs, dtype=bool)
    is_boundary[space.boundary_dofs] = True
    rows, cols, data = map(list, map(np.ndarray.tolist, _drop_rows(stiffness, is_boundary)))
    F = F.copy()

    for dof in space.boundary_dofs:
        tri, cid = owner[dof]
        xi = space.dof_coords[dof]
        eta = geometry.closest_point(xi, cid)
        vals, _ = _basis_at(space, tri, eta[None, :])
        gdofs = space.cell_dofs[tri]
        rows.extend([int(dof)] * len(gdofs))
        cols.extend(gdofs.tolist())
        data.extend(vals[0].tolist())
        F[dof] = problem.g_D(eta[0], eta[1])

    A = sparse.coo_matrix(
        (data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    ).tocsr()
    return LinearSystem(A, F, space.boundary_dofs.copy())


def assemble_pefem_neumann(space, problem, geometry):
    """Natural-condition system with the extended-flux boundary correction.

    The correction integrates, against each boundary test trace, the
    difference between the extended polynomial flux evaluated on the true
    boundary (with the exact normal) and the discrete flux on the polygonal
    boundary (with the facet normal).
    """
    if problem.bc_kind != "neumann":
        raise ConfigurationError("problem is not a Neumann problem")
    rule = quadrature_for_degree(space.degree)
    A = assemble_operator(space, p=problem.p, q=problem.q, form="N", quadrature=rule)
    F = assemble_load(space, problem.f, quadrature=rule)

    rows, cols, data = [], [], []
    normals_h = space.mesh.edge_normals
    for edge in _BoundaryEdgeQuadrature(space, geometry, rule):
        vals_x, grads_x = _basis_at(space, edge.tri, edge.x)
        _vals_eta, grads_eta = _basis_at(space, edge.tri, edge.eta)
        n_true = geometry.unit_normal(edge.eta, edge.curve_id)
        n_h = normals_h[edge.index]
        p_eta = problem.p(edge.eta[:, 0], edge.eta[:, 1])
        p_x = problem.p(edge.x[:, 0], edge.x[:, 1])
        # Fluxes per quadrature point and trial function.
        flux_ext = p_eta[:, None] * np.einsum("qjd,qd->qj", grads_eta, n_true)
        flux_std = p_x[:, None] * (grads_x @ n_h)
        test = vals_x[:, edge.local_edge]
        block = np.einsum("q,qi,qj->ij", edge.weights, test, flux_ext - flux_std)
        gdofs = space.cell_dofs[edge.tri]
        test_dofs = gdofs[edge.local_edge]
        rows.extend(np.repeat(test_dofs, len(gdofs)).tolist())
        cols.extend(np.tile(gdofs, len(test_dofs)).tolist())
        data.extend(block.ravel().tolist())
        g_vals = problem.g_N(edge.eta[:, 0], edge.eta[:, 1], n_true[:, 0], n_true[:, 1])
        np.add.at(F, test_dofs, np.einsum("q,qi,q->i", edge.weights, test, g_vals))

    tau = sparse.coo_matrix(
        (data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    )
    return LinearSystem((A + tau).tocsr(), F, space.boundary_dofs.copy())


def assemble_tau_neumann(space, problem, geometry):
    """The boundary flux-correction matrix alone (diagnostic)."""
    rule = quadrature_for_degree(space.degree)
    rows, cols, data = [], [], []
    normals_h = space.mesh.edge_normals
    for edge in _BoundaryEdgeQuadrature(space, geometry, rule):
        vals_x, grads_x = _basis_at(space, edge.tri, edge.x)
        _ve, grads_eta = _basis_at(space, edge.tri, edge.eta)
        n_true = geometry.unit_normal(edge.eta, edge.curve_id)
        n_h = normals_h[edge.index]
        p_eta = problem.p(edge.eta[:, 0], edge.eta[:, 1])
        p_x = problem.p(edge.x[:, 0], edge.x[:, 1])
        flux_ext = p_eta[:, None] * np.einsum("qjd,qd->qj", grads_eta, n_true)
        flux_std = p_x[:, None] * (grads_x @ n_h)
        test = vals_x[:, edge.local_edge]
        block = np.einsum("q,qi,qj->ij", edge.weights, test, flux_ext - flux_std)
        gdofs = space.cell_dofs[edge.tri]
        test_dofs = gdofs[edge.local_edge]
        rows.extend(np.repeat(test_dofs, len(gdofs)).tolist())
        cols.extend(np.tile(gdofs, len(test_dofs)).tolist())
        data.extend(block.ravel().tolist())
    return sparse.coo_matrix(
        (data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    ).tocsr()


def assemble_standard_dirichlet(space, problem, geometry=None):
    """Classical baseline: each boundary dof is pinned to the boundary
    datum taken from the true curve and assigned to the polygonal node.

    Without a geometry, the datum is evaluated at the node itself.  With a
    geometry, the value comes from the closest point on the true boundary,
    which is what a practitioner must do when the datum is only known on
    the curve; the node itself sits up to O(h^2) away, and carrying that
    mismatch into the constraint is the classical variational crime that
    caps high-order convergence at second order.
    """
    if problem.exact_u is None:
        raise ConfigurationError("the baseline needs the exact solution")
    datum = problem.g_D if problem.g_D is not None else problem.exact_u
    rule = quadrature_for_degree(space.degree)
    stiffness = assemble_operator(space, p=problem.p, form="D", quadrature=rule)
    F = assemble_load(space, problem.f, quadrature=rule)

    owner = {}
    if geometry is not None:
        for v0, v1, _tri, cid in space.mesh.boundary_edges:
            for d in space.edge_dofs(v0, v1):
                owner.setdefault(d, cid)

    is_boundary = np.zeros(space.n_dofs, dtype=bool)
    is_boundary[space.boundary_dofs] = True
    rows, cols, data = map(list, map(np.ndarray.tolist, _drop_rows(stiffness, is_boundary)))
    F = F.copy()
    for dof in space.boundary_dofs:
        rows.append(int(dof))
        cols.append(int(dof))
        data.append(1.0)
        xi = space.dof_coords[dof]
        if geometry is not None:
            xi = geometry.closest_point(xi, owner[dof])
        F[dof] = datum(xi[0], xi[1])

    A = sparse.coo_matrix(
        (data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)
    ).tocsr()
    return LinearSystem(A, F, space.boundary_dofs.copy())
