"""Sparse operator assembly for the velocity-only penalty system.

All operators are built from scalar P2 blocks on the triangulation and
composed into vector form:

    M  mass            (u, v)
    A  stiffness       (grad u, grad v)        nu applied at system build
    G  grad-div        (div u, div v)          1/eps applied at system build
    N  skew convection (w.grad u, v) + ((div w) u, v)/2
    D  divergence coupling (div u, q) against P1 test functions

nu and 1/eps stay out of A and G so the penalty parameter can change
between attempts without reassembly.
"""

import numpy as np
import scipy.sparse as sp

from .fespace import (P2_VALS, P2_GRADS, P1_VALS, QUAD_WEIGHTS, P2_VECTOR,
                      P1_SCALAR)


def _check_kind(space, kind):
    if space.kind != kind:
        raise ValueError("expected a %s space, got %s" % (kind, space.kind))


def _scalar_csr(space, elem_mats):
    """Assemble (m, nd, nd) element matrices into a scalar CSR matrix."""
    dofs = space.element_scalar_dofs
    nd = dofs.shape[1]
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    mat = sp.coo_matrix((elem_mats.ravel(), (rows, cols)),
                        shape=(space.n_scalar, space.n_scalar))
    out = mat.tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def _phys_grads(space):
    """Physical gradients of P2 basis at quadrature points, (m, nq, 6, 2)."""
    return np.einsum("mab,qib->mqia", space.jinvT, P2_GRADS)


def assemble_mass(V):
    """Vector mass matrix M with w^T M v = (w, v)_L2."""
    _check_kind(V, P2_VECTOR)
    elem = np.einsum("q,qi,qj,m->mij", QUAD_WEIGHTS, P2_VALS, P2_VALS, V.detJ)
    Ms = _scalar_csr(V, elem)
    return sp.block_diag((Ms, Ms), format="csr")


def assemble_stiffness(V):
    """Vector stiffness A with w^T A v = (grad w, grad v)."""
    _check_kind(V, P2_VECTOR)
    g = _phys_grads(V)
    elem = np.einsum("q,mqia,mqja,m->mij", QUAD_WEIGHTS, g, g, V.detJ)
    Ks = _scalar_csr(V, elem)
    return sp.block_diag((Ks, Ks), format="csr")


def assemble_graddiv(V):
    """Grad-div matrix G with v^T G v = ||div v||^2."""
    _check_kind(V, P2_VECTOR)
    g = _phys_grads(V)
    det = V.detJ
    kxx = np.einsum("q,mqi,mqj,m->mij", QUAD_WEIGHTS, g[..., 0], g[..., 0], det)
    kxy = np.einsum("q,mqi,mqj,m->mij", QUAD_WEIGHTS, g[..., 0], g[..., 1], det)
    kyy = np.einsum("q,mqi,mqj,m->mij", QUAD_WEIGHTS, g[..., 1], g[..., 1], det)
    Gxx = _scalar_csr(V, kxx)
    Gxy = _scalar_csr(V, kxy)
    Gyy = _scalar_csr(V, kyy)
    out = sp.bmat([[Gxx, Gxy], [Gxy.T, Gyy]], format="csr")
    out.sort_indices()
    return out


def assemble_convection(V, u_star):
    """Skew-symmetrized convection N(u*).

    Entries are (u*.grad phi_j, phi_i) + ((div u*) phi_j, phi_i)/2 on each
    scalar block; with the degree-5 rule the form satisfies
    w^T N(u*) w = 0 exactly (to roundoff) for any w vanishing on the
    boundary, which is what the energy identity rests on.
    """
    _check_kind(V, P2_VECTOR)
    if u_star.space is not V:
        raise ValueError("u_star lives in a different space")
    cx, cy = V.split(u_star.coeffs)
    wx = V.scalar_at_quad(cx)                      # (m, nq)
    wy = V.scalar_at_quad(cy)
    gx = V.scalar_grad_at_quad(cx)                 # (m, nq, 2)
    gy = V.scalar_grad_at_quad(cy)
    div_w = gx[:, :, 0] + gy[:, :, 1]
    g = _phys_grads(V)                             # (m, nq, j, 2)
    adv = (wx[:, :, None] * g[..., 0] + wy[:, :, None] * g[..., 1])
    elem = np.einsum("q,qi,mqj,m->mij", QUAD_WEIGHTS, P2_VALS, adv, V.detJ)
    elem += 0.5 * np.einsum("q,mq,qi,qj,m->mij",
                            QUAD_WEIGHTS, div_w, P2_VALS, P2_VALS, V.detJ)
    C = _scalar_csr(V, elem)
    return sp.block_diag((C, C), format="csr")


def assemble_load(V, f, t):
    """Load vector with entries (f(., t), phi_i) by quadrature."""
    _check_kind(V, P2_VECTOR)
    x = V.quad_xy[:, :, 0]
    y = V.quad_xy[:, :, 1]
    fx, fy = f(x, y, t)
    fx = np.broadcast_to(fx, x.shape)
    fy = np.broadcast_to(fy, x.shape)
    bx_elem = np.einsum("q,mq,qi,m->mi", QUAD_WEIGHTS, fx, P2_VALS, V.detJ)
    by_elem = np.einsum("q,mq,qi,m->mi", QUAD_WEIGHTS, fy, P2_VALS, V.detJ)
    b = np.zeros(V.dof_count)
    np.add.at(b, V.element_scalar_dofs, bx_elem)
    np.add.at(b, V.n_scalar + V.element_scalar_dofs, by_elem)
    return b


def assemble_div_coupling(V, Q):
    """Matrix D with (D u)_i = (div u, q_i) for P1 test functions q_i."""
    _check_kind(V, P2_VECTOR)
    _check_kind(Q, P1_SCALAR)
    g = _phys_grads(V)
    det = V.detJ
    dx = np.einsum("q,qi,mqj,m->mij", QUAD_WEIGHTS, P1_VALS, g[..., 0], det)
    dy = np.einsum("q,qi,mqj,m->mij", QUAD_WEIGHTS, P1_VALS, g[..., 1], det)
    rows = np.repeat(Q.element_scalar_dofs, 6, axis=1).ravel()
    cols = np.tile(V.element_scalar_dofs, (1, 3)).ravel()
    Dx = sp.coo_matrix((dx.ravel(), (rows, cols)),
                       shape=(Q.dof_count, V.n_scalar)).tocsr()
    Dy = sp.coo_matrix((dy.ravel(), (rows, cols)),
                       shape=(Q.dof_count, V.n_scalar)).tocsr()
    out = sp.hstack([Dx, Dy], format="csr")
    out.sort_indices()
    return out


def assemble_p1_mass(Q):
    """P1 scalar mass matrix (for pressure projection)."""
    _check_kind(Q, P1_SCALAR)
    elem = np.einsum("q,qi,qj,m->mij", QUAD_WEIGHTS, P1_VALS, P1_VALS, Q.detJ)
    return _scalar_csr(Q, elem)


def dirichlet_values(V, g, t):
    """Boundary values of g at the constrained scalar DOF locations."""
    dd = V.scalar_dirichlet_dofs
    x = V.dof_coords[dd, 0]
    y = V.dof_coords[dd, 1]
    gx, gy = g(x, y, t)
    return (np.broadcast_to(np.asarray(gx, dtype=float), x.shape),
            np.broadcast_to(np.asarray(gy, dtype=float), y.shape))


def apply_dirichlet(S, rhs, V, g, t):
    """Impose u = g on the boundary by row replacement + column elimination.

    Returns a new (matrix, rhs) pair; the inputs are not modified.  The
    interior block of the returned matrix equals the interior block of S,
    so interior equations are untouched (this keeps the discrete energy
    identity intact for homogeneous data).
    """
    _check_kind(V, P2_VECTOR)
    gx, gy = dirichlet_values(V, g, t)
    dd = V.dirichlet_dofs
    gfull = np.zeros(V.dof_count)
    gfull[V.scalar_dirichlet_dofs] = gx
    gfull[V.n_scalar + V.scalar_dirichlet_dofs] = gy

    rhs = rhs - S @ gfull
    rhs[dd] = gfull[dd]

    keep = np.ones(V.dof_count)
    keep[dd] = 0.0
    P = sp.diags(keep)
    eye_d = sp.diags(1.0 - keep)
    Sbc = (P @ S @ P + eye_d).tocsr()
    Sbc.sort_indices()
    return Sbc, rhs
