"""P2 vector / P1 scalar elements on triangles: DOFs, interpolation, norms.

The velocity space is vector-valued quadratic Lagrange (Taylor-Hood
velocity); the pressure space is linear Lagrange, used only for pressure
recovery.  One quadrature rule is used everywhere: the 7-point degree-5
rule, which integrates the mass, stiffness and grad-div integrands of P2
exactly and, crucially, the skew-symmetrized convection integrand (degree
5 once one derivative is taken), so the discrete energy identity holds to
roundoff.
"""

import numpy as np

P2_VECTOR = "P2-vector"
P1_SCALAR = "P1-scalar"

# 7-point degree-5 rule on the reference triangle (barycentric points,
# weights summing to the reference area 1/2).
_S15 = np.sqrt(15.0)
_B1 = (6.0 + _S15) / 21.0
_B2 = (6.0 - _S15) / 21.0
QUAD_BARY = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [1.0 - 2.0 * _B1, _B1, _B1],
    [_B1, 1.0 - 2.0 * _B1, _B1],
    [_B1, _B1, 1.0 - 2.0 * _B1],
    [1.0 - 2.0 * _B2, _B2, _B2],
    [_B2, 1.0 - 2.0 * _B2, _B2],
    [_B2, _B2, 1.0 - 2.0 * _B2],
])
QUAD_WEIGHTS = np.array(
    [9.0 / 80.0]
    + [(155.0 + _S15) / 2400.0] * 3
    + [(155.0 - _S15) / 2400.0] * 3)

# Barycentric gradients w.r.t. reference coordinates (xi, eta).
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

# Local P2 ordering: vertices 0,1,2 then edge midpoints (0,1),(1,2),(2,0).
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


def p2_values(bary):
    """P2 shape function values at barycentric points, shape (nq, 6)."""
    lam = np.asarray(bary)
    vals = np.empty(lam.shape[:-1] + (6,))
    for i in range(3):
        vals[..., i] = lam[..., i] * (2.0 * lam[..., i] - 1.0)
    for k, (i, j) in enumerate(_P2_EDGES):
        vals[..., 3 + k] = 4.0 * lam[..., i] * lam[..., j]
    return vals


def p2_ref_grads(bary):
    """P2 shape gradients w.r.t. (xi, eta) at barycentric points, (nq, 6, 2)."""
    lam = np.asarray(bary)
    grads = np.empty(lam.shape[:-1] + (6, 2))
    for i in range(3):
        grads[..., i, :] = (4.0 * lam[..., i, None] - 1.0) * _DLAMBDA[i]
    for k, (i, j) in enumerate(_P2_EDGES):
        grads[..., 3 + k, :] = 4.0 * (lam[..., i, None] * _DLAMBDA[j]
                                      + lam[..., j, None] * _DLAMBDA[i])
    return grads


def p1_values(bary):
    """P1 shape function values (the barycentric coordinates themselves)."""
    return np.asarray(bary).copy()


P2_VALS = p2_values(QUAD_BARY)          # (7, 6)
P2_GRADS = p2_ref_grads(QUAD_BARY)      # (7, 6, 2)
P1_VALS = p1_values(QUAD_BARY)          # (7, 3)
P1_GRADS = np.broadcast_to(_DLAMBDA, (7, 3, 2)).copy()


class FESpace:
    """Finite element space over a Mesh; built via build_space()."""

    def __init__(self, mesh, kind):
        if kind not in (P2_VECTOR, P1_SCALAR):
            raise ValueError("unknown space kind %r" % (kind,))
        self.mesh = mesh
        self.kind = kind
        self._build_geometry()
        if kind == P2_VECTOR:
            self._build_p2()
        else:
            self._build_p1()

    # -- construction ---------------------------------------------------

    def _build_geometry(self):
        p = self.mesh.nodes[self.mesh.triangles]       # (m, 3, 2)
        jac = np.empty((self.mesh.n_triangles, 2, 2))
        jac[:, :, 0] = p[:, 1] - p[:, 0]
        jac[:, :, 1] = p[:, 2] - p[:, 0]
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv /= det[:, None, None]
        self.jac = jac
        self.detJ = det                                 # = 2 * area > 0
        self.jinvT = np.transpose(inv, (0, 2, 1))
        # physical quadrature points: sum_i lambda_i * p_i
        self.quad_xy = np.einsum("qi,mid->mqd", QUAD_BARY, p)

    def _build_p2(self):
        mesh = self.mesh
        edge_index = {}
        edges = []
        elem_edge = np.empty((mesh.n_triangles, 3), dtype=int)
        for e, tri in enumerate(mesh.triangles):
            for k, (a, b) in enumerate(_P2_EDGES):
                key = (int(min(tri[a], tri[b])), int(max(tri[a], tri[b])))
                if key not in edge_index:
                    edge_index[key] = len(edges)
                    edges.append(key)
                elem_edge[e, k] = edge_index[key]
        self.edges = np.array(edges, dtype=int)
        self.n_scalar = mesh.n_nodes + len(edges)
        self.dof_count = 2 * self.n_scalar
        self.element_scalar_dofs = np.hstack(
            [mesh.triangles, mesh.n_nodes + elem_edge])
        self.element_dofs = np.hstack(
            [self.element_scalar_dofs, self.n_scalar + self.element_scalar_dofs])
        midpoints = 0.5 * (mesh.nodes[self.edges[:, 0]]
                           + mesh.nodes[self.edges[:, 1]])
        self.dof_coords = np.vstack([mesh.nodes, midpoints])

        # Constrained (velocity) DOFs: endpoints and midpoints of edges
        # owned by exactly one triangle.
        counts = mesh.edge_counts()
        bnd_vertices = set()
        bnd_edges = []
        for idx, (i, j) in enumerate(edges):
            if counts[(i, j)] == 1:
                bnd_vertices.update((i, j))
                bnd_edges.append(idx)
        scalar_bnd = np.array(
            sorted(bnd_vertices) + [mesh.n_nodes + e for e in sorted(bnd_edges)],
            dtype=int)
        scalar_bnd.sort()
        self.scalar_dirichlet_dofs = scalar_bnd
        self.dirichlet_dofs = np.concatenate(
            [scalar_bnd, self.n_scalar + scalar_bnd])

    def _build_p1(self):
        mesh = self.mesh
        self.n_scalar = mesh.n_nodes
        self.dof_count = mesh.n_nodes
        self.element_scalar_dofs = mesh.triangles.copy()
        self.element_dofs = self.element_scalar_dofs
        self.dof_coords = mesh.nodes.copy()
        self.scalar_dirichlet_dofs = np.empty(0, dtype=int)
        self.dirichlet_dofs = np.empty(0, dtype=int)

    # -- evaluation helpers (used by norms and assembly) ----------------

    def scalar_at_quad(self, scalar_coeffs):
        """Values of a scalar FE function at all quadrature points, (m, nq)."""
        vals = P2_VALS if self.kind == P2_VECTOR else P1_VALS
        u = scalar_coeffs[self.element_scalar_dofs]    # (m, ndof)
        return np.einsum("mi,qi->mq", u, vals)

    def scalar_grad_at_quad(self, scalar_coeffs):
        """Physical gradients of a scalar FE function, (m, nq, 2)."""
        grads = P2_GRADS if self.kind == P2_VECTOR else P1_GRADS
        u = scalar_coeffs[self.element_scalar_dofs]
        ref = np.einsum("mi,qid->mqd", u, grads)
        return np.einsum("mab,mqb->mqa", self.jinvT, ref)

    def split(self, coeffs):
        """Split vector coefficients into (x-part, y-part)."""
        if self.kind != P2_VECTOR:
            raise ValueError("split() applies to the vector space only")
        return coeffs[:self.n_scalar], coeffs[self.n_scalar:]


class Field:
    """Coefficient vector tagged with its finite element space."""

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.dof_count,):
            raise ValueError("coefficient vector has length %d, space wants %d"
                             % (coeffs.size, space.dof_count))
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficient in field")
        self.space = space
        self.coeffs = coeffs

    def copy(self):
        return Field(self.space, self.coeffs.copy())


def build_space(mesh, kind):
    """Construct an FESpace of the given kind over the mesh."""
    return FESpace(mesh, kind)


def interpolate(space, g, t=0.0):
    """Nodal interpolant of g(x, y, t) onto the space.

    g must be numpy-vectorized: given coordinate arrays it returns a
    (gx, gy) pair for the vector space or a single array for the scalar
    space.  Samples are taken at vertices and edge midpoints (P2) or
    vertices (P1).
    """
    x, y = space.dof_coords[:, 0], space.dof_coords[:, 1]
    if space.kind == P2_VECTOR:
        gx, gy = g(x, y, t)
        coeffs = np.concatenate([np.broadcast_to(gx, x.shape),
                                 np.broadcast_to(gy, y.shape)])
    else:
        coeffs = np.broadcast_to(np.asarray(g(x, y, t), dtype=float),
                                 x.shape).copy()
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("interpolated function produced non-finite values")
    return Field(space, coeffs)


def norm(f, kind="L2"):
    """Quadrature norm of a Field.

    kind is one of 'L2', 'H1-semi', 'div-L2' (vector fields only), or
    'Linf-nodal' (max absolute DOF value, the documented approximation of
    the true sup-norm).
    """
    space = f.space
    if kind == "Linf-nodal":
        return float(np.max(np.abs(f.coeffs))) if f.coeffs.size else 0.0

    w = QUAD_WEIGHTS
    if space.kind == P2_VECTOR:
        cx, cy = space.split(f.coeffs)
        if kind == "L2":
            ux = space.scalar_at_quad(cx)
            uy = space.scalar_at_quad(cy)
            dens = ux ** 2 + uy ** 2
        elif kind == "H1-semi":
            gx = space.scalar_grad_at_quad(cx)
            gy = space.scalar_grad_at_quad(cy)
            dens = np.sum(gx ** 2, axis=2) + np.sum(gy ** 2, axis=2)
        elif kind == "div-L2":
            gx = space.scalar_grad_at_quad(cx)
            gy = space.scalar_grad_at_quad(cy)
            dens = (gx[:, :, 0] + gy[:, :, 1]) ** 2
        else:
            raise ValueError("unknown norm kind %r" % (kind,))
    else:
        if kind == "L2":
            dens = space.scalar_at_quad(f.coeffs) ** 2
        elif kind == "H1-semi":
            g = space.scalar_grad_at_quad(f.coeffs)
            dens = np.sum(g ** 2, axis=2)
        else:
            raise ValueError("norm kind %r not defined for scalar fields"
                             % (kind,))
    total = np.einsum("mq,q,m->", dens, w, space.detJ)
    return float(np.sqrt(max(total, 0.0)))


def l2_error(f, exact, t):
    """Quadrature L2 distance between a Field and an exact function.

    exact follows the interpolate() convention: (gx, gy) for vector
    fields, a single array for scalar ones, evaluated at the physical
    quadrature points.
    """
    space = f.space
    x = space.quad_xy[:, :, 0]
    y = space.quad_xy[:, :, 1]
    if space.kind == P2_VECTOR:
        cx, cy = space.split(f.coeffs)
        ex, ey = exact(x, y, t)
        dens = ((space.scalar_at_quad(cx) - ex) ** 2
                + (space.scalar_at_quad(cy) - ey) ** 2)
    else:
        dens = (space.scalar_at_quad(f.coeffs) - exact(x, y, t)) ** 2
    total = np.einsum("mq,q,m->", dens, QUAD_WEIGHTS, space.detJ)
    return float(np.sqrt(max(total, 0.0)))
