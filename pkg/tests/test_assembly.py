import numpy as np
import pytest
import scipy.sparse.linalg as spla

from penaltyflow.mesh import build_rect_mesh
from penaltyflow.fespace import build_space, interpolate, P2_VECTOR, P1_SCALAR
from penaltyflow.assembly import (assemble_mass, assemble_stiffness,
                                  assemble_graddiv, assemble_convection,
                                  assemble_load, assemble_div_coupling,
                                  assemble_p1_mass, apply_dirichlet)


def spaces(n=4):
    mesh = build_rect_mesh(n, n, 0.0, 0.0, 1.0, 1.0)
    return build_space(mesh, P2_VECTOR), build_space(mesh, P1_SCALAR)


def test_mass_constant_vector_gives_area():
    V, _ = spaces()
    M = assemble_mass(V)
    u = interpolate(V, lambda x, y, t: (np.ones_like(x), np.zeros_like(x)))
    assert np.isclose(u.coeffs @ M @ u.coeffs, 1.0, rtol=1e-13)


def test_mass_quadratic_oracle():
    # (x^2, 0) against itself: integral of x^4 over the unit square is 1/5
    V, _ = spaces()
    M = assemble_mass(V)
    u = interpolate(V, lambda x, y, t: (x ** 2, np.zeros_like(x)))
    assert np.isclose(u.coeffs @ M @ u.coeffs, 0.2, rtol=1e-13)


def test_stiffness_quadratic_oracle():
    # grad (x^2) = (2x, 0); integral of 4x^2 is 4/3
    V, _ = spaces()
    A = assemble_stiffness(V)
    u = interpolate(V, lambda x, y, t: (x ** 2, np.zeros_like(x)))
    assert np.isclose(u.coeffs @ A @ u.coeffs, 4.0 / 3.0, rtol=1e-13)


def test_stiffness_annihilates_constants():
    V, _ = spaces()
    A = assemble_stiffness(V)
    u = interpolate(V, lambda x, y, t: (np.ones_like(x), -np.ones_like(x)))
    assert abs(u.coeffs @ A @ u.coeffs) < 1e-13


def test_graddiv_closed_form():
    # div (x, y) = 2 so the form evaluates to 4; div (y, x) = 0
    V, _ = spaces()
    G = assemble_graddiv(V)
    u = interpolate(V, lambda x, y, t: (x, y))
    w = interpolate(V, lambda x, y, t: (y, x))
    assert np.isclose(u.coeffs @ G @ u.coeffs, 4.0, rtol=1e-13)
    assert abs(w.coeffs @ G @ w.coeffs) < 1e-13


def test_graddiv_matches_div_norm():
    from penaltyflow.fespace import norm
    V, _ = spaces(3)
    G = assemble_graddiv(V)
    rng = np.random.default_rng(7)
    u = interpolate(V, lambda x, y, t: (x * y, x ** 2 - y))
    quad = u.coeffs @ G @ u.coeffs
    assert np.isclose(np.sqrt(quad), norm(u, "div-L2"), rtol=1e-12)


def test_convection_closed_form_divfree_wind():
    # wind (1,0): entry is integral of d/dx(x^2) * x = 2/3
    V, _ = spaces()
    w = interpolate(V, lambda x, y, t: (np.ones_like(x), np.zeros_like(x)))
    N = assemble_convection(V, w)
    v = interpolate(V, lambda x, y, t: (x ** 2, np.zeros_like(x)))
    u = interpolate(V, lambda x, y, t: (x, np.zeros_like(x)))
    assert np.isclose(u.coeffs @ N @ v.coeffs, 2.0 / 3.0, rtol=1e-13)


def test_convection_closed_form_compressible_wind():
    # wind (x,0) has div = 1; advective part gives 1/2, the half-div
    # correction adds 1/8
    V, _ = spaces()
    w = interpolate(V, lambda x, y, t: (x, np.zeros_like(x)))
    N = assemble_convection(V, w)
    v = interpolate(V, lambda x, y, t: (x ** 2, np.zeros_like(x)))
    u = interpolate(V, lambda x, y, t: (x, np.zeros_like(x)))
    assert np.isclose(u.coeffs @ N @ v.coeffs, 0.5 + 0.125, rtol=1e-13)


def test_convection_skew_on_zero_trace_fields():
    V, _ = spaces(5)
    rng = np.random.default_rng(42)
    wind = interpolate(V, lambda x, y, t: (np.sin(3 * x) * y, x - y ** 2))
    N = assemble_convection(V, wind)
    for _ in range(5):
        w = rng.standard_normal(V.dof_count)
        w[V.dirichlet_dofs] = 0.0
        quad = w @ N @ w
        bound = 1e-12 * (w @ w) * max(1.0, np.abs(wind.coeffs).max())
        assert abs(quad) <= bound


def test_load_constant_force():
    V, _ = spaces()
    b = assemble_load(V, lambda x, y, t: (np.ones_like(x), np.zeros_like(x)),
                      0.0)
    one_x = interpolate(V, lambda x, y, t: (np.ones_like(x),
                                            np.zeros_like(x)))
    assert np.isclose(b @ one_x.coeffs, 1.0, rtol=1e-13)


def test_load_time_dependent_force():
    V, _ = spaces()
    b = assemble_load(V, lambda x, y, t: (t * x, np.zeros_like(x)), 2.0)
    one_x = interpolate(V, lambda x, y, t: (np.ones_like(x),
                                            np.zeros_like(x)))
    assert np.isclose(b @ one_x.coeffs, 1.0, rtol=1e-13)  # 2 * int x = 1


def test_div_coupling_closed_form():
    V, Q = spaces()
    D = assemble_div_coupling(V, Q)
    u = interpolate(V, lambda x, y, t: (x, y))
    q = interpolate(Q, lambda x, y, t: x)
    # (div u, q) = (2, x) = 2 * 1/2 = 1
    assert np.isclose(q.coeffs @ D @ u.coeffs, 1.0, rtol=1e-13)


def test_p1_mass_total_area():
    V, Q = spaces()
    Mq = assemble_p1_mass(Q)
    ones = np.ones(Q.dof_count)
    assert np.isclose(ones @ Mq @ ones, 1.0, rtol=1e-13)


def test_apply_dirichlet_manufactured_solve():
    V, _ = spaces(3)
    S = (assemble_mass(V) + assemble_stiffness(V)).tocsr()

    def g(x, y, t):
        return x + 2.0 * y, x - y

    u_ex = interpolate(V, g)
    rhs = S @ u_ex.coeffs
    Sbc, rhs_bc = apply_dirichlet(S, rhs, V, g, 0.0)
    sol = spla.spsolve(Sbc.tocsc(), rhs_bc)
    assert np.allclose(sol, u_ex.coeffs, atol=1e-11)


def test_apply_dirichlet_preserves_interior_rows():
    V, _ = spaces(2)
    S = assemble_stiffness(V).tocsr()
    rhs = np.zeros(V.dof_count)
    Sbc, _ = apply_dirichlet(S, rhs, V,
                             lambda x, y, t: (np.zeros_like(x),
                                              np.zeros_like(x)), 0.0)
    free = np.setdiff1d(np.arange(V.dof_count), V.dirichlet_dofs)
    diff = (Sbc - S).tocsr()[free][:, free]
    assert abs(diff).max() == 0.0


def test_apply_dirichlet_does_not_mutate_inputs():
    V, _ = spaces(2)
    S = assemble_mass(V).tocsr()
    rhs = np.ones(V.dof_count)
    S0 = S.copy()
    rhs0 = rhs.copy()
    apply_dirichlet(S, rhs, V,
                    lambda x, y, t: (x, y), 0.0)
    assert (S != S0).nnz == 0
    assert np.array_equal(rhs, rhs0)
