import numpy as np
import pytest

from penaltyflow.problems import (Problem, taylor_green, vortex_square,
                                  offset_circles, get_problem, verify_forcing)


def test_forcing_consistent_with_momentum_equation():
    # the finite-difference residual is pure truncation error when the
    # hand-derived force is right; 1e-6 leaves two orders of headroom
    assert verify_forcing(taylor_green(), n_samples=300, seed=1) < 1e-6
    assert verify_forcing(vortex_square(), n_samples=300, seed=1) < 1e-6


def test_verify_forcing_catches_corruption():
    base = vortex_square()

    def bad_force(x, y, t):
        f1, f2 = base.force(x, y, t)
        return f1 * 1.001, f2

    broken = Problem(base.name, base.nu, bad_force, base.dirichlet,
                     base.initial, domain=base.domain,
                     exact_u=base.exact_u, exact_p=base.exact_p)
    assert verify_forcing(broken, n_samples=300, seed=1) > 1e-4


def test_verify_forcing_catches_dropped_term():
    base = taylor_green()

    def bad_force(x, y, t):
        f1, f2 = base.force(x, y, t)
        return f1, np.zeros_like(f2)

    broken = Problem(base.name, base.nu, bad_force, base.dirichlet,
                     base.initial, domain=base.domain,
                     exact_u=base.exact_u, exact_p=base.exact_p)
    assert verify_forcing(broken, n_samples=300, seed=1) > 1e-2


def test_exact_velocities_divergence_free():
    rng = np.random.default_rng(5)
    h = 1e-4
    for prob in (taylor_green(), vortex_square()):
        (x0, y0), (x1, y1) = prob.domain
        x = rng.uniform(x0 + h, x1 - h, 100)
        y = rng.uniform(y0 + h, y1 - h, 100)
        t = rng.uniform(0.0, 2.0, 100)
        du1 = (prob.exact_u(x + h, y, t)[0] - prob.exact_u(x - h, y, t)[0])
        du2 = (prob.exact_u(x, y + h, t)[1] - prob.exact_u(x, y - h, t)[1])
        div = (du1 + du2) / (2 * h)
        assert np.abs(div).max() < 1e-6


def test_vortex_boundary_data_is_exact_zero():
    prob = vortex_square()
    s = np.linspace(-1.0, 1.0, 17)
    for x, y in [(s, -np.ones_like(s)), (s, np.ones_like(s)),
                 (-np.ones_like(s), s), (np.ones_like(s), s)]:
        g1, g2 = prob.dirichlet(x, y, 0.7)
        assert np.all(g1 == 0.0) and np.all(g2 == 0.0)
        u1, u2 = prob.exact_u(x, y, 0.7)
        assert np.abs(u1).max() < 1e-14 and np.abs(u2).max() < 1e-14


def test_taylor_green_boundary_uses_exact_solution():
    prob = taylor_green()
    x = np.array([0.0, 1.0])
    y = np.array([0.0, 2.0])
    g = prob.dirichlet(x, y, 0.3)
    u = prob.exact_u(x, y, 0.3)
    assert np.array_equal(g[0], u[0]) and np.array_equal(g[1], u[1])


def test_initial_matches_exact_at_zero():
    for prob in (taylor_green(), vortex_square()):
        x = np.linspace(*[b[0] for b in prob.domain], 7)
        y = np.linspace(*[b[1] for b in prob.domain], 7)
        i1, i2 = prob.initial(x, y)
        e1, e2 = prob.exact_u(x, y, 0.0)
        assert np.allclose(i1, e1, atol=1e-15)
        assert np.allclose(i2, e2, atol=1e-15)


def test_offset_circles_has_no_exact_solution():
    prob = offset_circles()
    assert prob.exact_u is None
    with pytest.raises(ValueError):
        verify_forcing(prob)


def test_offset_circles_force_ramp():
    prob = offset_circles()
    f_half = prob.force(0.3, 0.2, 0.5)
    f_one = prob.force(0.3, 0.2, 1.0)
    f_late = prob.force(0.3, 0.2, 7.0)
    assert np.allclose(np.asarray(f_half) * 2.0, f_one)
    assert np.allclose(f_one, f_late)


def test_make_mesh_domains():
    m = taylor_green().make_mesh(4)
    assert np.isclose(m.nodes[:, 0].max(), 2 * np.pi)
    m = vortex_square().make_mesh(4)
    assert m.nodes[:, 0].min() == -1.0 and m.nodes[:, 1].max() == 1.0


def test_get_problem_registry():
    assert get_problem("taylor_green").name == "taylor_green"
    with pytest.raises(ValueError, match="unknown problem"):
        get_problem("lid_cavity")
