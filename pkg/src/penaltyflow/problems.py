"""Benchmark problems: exact solutions, forcing terms, boundary data.

Each problem bundles the viscosity, the domain, vectorized callables for
the exact velocity/pressure (when known), the body force, the Dirichlet
boundary velocity, and the initial velocity.  Forces were derived by hand
from the exact solutions; ``verify_forcing`` checks that derivation
independently with high-order finite differences, so a dropped term or a
sign slip in any forcing expression is caught at test time.
"""

from importlib import resources

import numpy as np

from .mesh import build_crisscross_mesh, load_mesh

TWO_PI = 2.0 * np.pi


class Problem:
    """A flow configuration the solver can run.

    Attributes
    ----------
    name : str
        Registry key, also used in output file names.
    nu : float
        Kinematic viscosity.
    domain : tuple or None
        ((x0, y0), (x1, y1)) for rectangle domains; None when the mesh
        comes from a file.
    mesh_file : str or None
        Default mesh file for non-rectangular domains.
    exact_u, exact_p : callable or None
        Vectorized exact fields; exact_u(x, y, t) -> (u1, u2),
        exact_p(x, y, t) -> p.
    force : callable
        Body force, force(x, y, t) -> (f1, f2).
    dirichlet : callable
        Boundary velocity, same signature as exact_u.
    initial : callable
        Initial velocity, initial(x, y) -> (u1, u2).
    """

    def __init__(self, name, nu, force, dirichlet, initial, domain=None,
                 mesh_file=None, exact_u=None, exact_p=None):
        self.name = name
        self.nu = nu
        self.force = force
        self.dirichlet = dirichlet
        self.initial = initial
        self.domain = domain
        self.mesh_file = mesh_file
        self.exact_u = exact_u
        self.exact_p = exact_p

    def make_mesh(self, n):
        """Build the default n-by-n mesh for rectangle domains.

        Rectangle domains triangulate criss-cross: the penalty method
        drives the velocity toward the divergence-free subspace, which
        on single-diagonal patterns approximates poorly (locking), while
        the criss-cross centers keep it full-order.
        """
        if self.domain is None:
            if self.mesh_file is None:
                raise ValueError("problem %r has no default mesh" % self.name)
            return load_mesh(self.mesh_file)
        (x0, y0), (x1, y1) = self.domain
        return build_crisscross_mesh(n, n, x0, y0, x1, y1)


def taylor_green(nu=0.01):
    """Decaying vortex array on (0, 2*pi)^2 with a time-dependent
    pressure tilt, so the forcing is nonzero but spatially constant."""

    def exact_u(x, y, t):
        e = np.exp(-2.0 * nu * t)
        return (e * np.cos(x) * np.sin(y), -e * np.sin(x) * np.cos(y))

    def exact_p(x, y, t):
        e2 = np.exp(-4.0 * nu * t)
        return (-0.25 * e2 * (np.cos(2 * x) + np.cos(2 * y))
                + x * (np.sin(2 * t) + np.cos(3 * t))
                + y * (np.sin(3 * t) + np.cos(2 * t)))

    def force(x, y, t):
        shape = np.broadcast(x, y).shape
        f1 = np.full(shape, np.sin(2 * t) + np.cos(3 * t))
        f2 = np.full(shape, np.sin(3 * t) + np.cos(2 * t))
        return f1, f2

    def initial(x, y):
        return exact_u(x, y, 0.0)

    return Problem("taylor_green", nu, force, exact_u, initial,
                   domain=((0.0, 0.0), (TWO_PI, TWO_PI)),
                   exact_u=exact_u, exact_p=exact_p)


def vortex_square(nu=1.0):
    """Pulsating counter-rotating vortex pair on (-1, 1)^2.

    The velocity vanishes identically on the boundary, so the Dirichlet
    data is written as exact zeros rather than evaluations of the exact
    solution (the evaluations would carry O(1e-16) trig noise onto the
    constrained DOFs)."""

    pi = np.pi

    def exact_u(x, y, t):
        s = pi * np.sin(t)
        return (s * np.sin(2 * pi * y) * np.sin(pi * x) ** 2,
                -s * np.sin(2 * pi * x) * np.sin(pi * y) ** 2)

    def exact_p(x, y, t):
        return np.sin(t) * np.cos(pi * x) * np.sin(pi * y)

    def force(x, y, t):
        s, c = np.sin(t), np.cos(t)
        sx, sy = np.sin(pi * x), np.sin(pi * y)
        s2x, s2y = np.sin(2 * pi * x), np.sin(2 * pi * y)
        c2x, c2y = np.cos(2 * pi * x), np.cos(2 * pi * y)
        u1 = pi * s * s2y * sx ** 2
        u2 = -pi * s * s2x * sy ** 2
        u1_t = pi * c * s2y * sx ** 2
        u1_x = pi ** 2 * s * s2y * s2x
        u1_y = 2 * pi ** 2 * s * c2y * sx ** 2
        u1_lap = 2 * pi ** 3 * s * s2y * c2x - 4 * pi ** 3 * s * s2y * sx ** 2
        u2_t = -pi * c * s2x * sy ** 2
        u2_x = -2 * pi ** 2 * s * c2x * sy ** 2
        u2_y = -pi ** 2 * s * s2x * s2y
        u2_lap = 4 * pi ** 3 * s * s2x * sy ** 2 - 2 * pi ** 3 * s * s2x * c2y
        p_x = -pi * s * sx * sy
        p_y = pi * s * np.cos(pi * x) * np.cos(pi * y)
        f1 = u1_t + u1 * u1_x + u2 * u1_y - nu * u1_lap + p_x
        f2 = u2_t + u1 * u2_x + u2 * u2_y - nu * u2_lap + p_y
        return f1, f2

    def dirichlet(x, y, t):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()

    def initial(x, y):
        return exact_u(x, y, 0.0)

    return Problem("vortex_square", nu, force, dirichlet, initial,
                   domain=((-1.0, -1.0), (1.0, 1.0)),
                   exact_u=exact_u, exact_p=exact_p)


def offset_circles(nu=0.01, mesh_file=None):
    """Rotational forcing in the annulus between the unit circle and a
    small off-center hole; no exact solution is known.

    The default mesh ships with the package (regenerate it with
    scripts/gen_offset_mesh.py); pass mesh_file to use another one.
    """
    if mesh_file is None:
        mesh_file = str(resources.files("penaltyflow").joinpath(
            "assets/offset_circles.txt"))

    def force(x, y, t):
        ramp = np.minimum(t, 1.0)
        w = 1.0 - x ** 2 - y ** 2
        return -4.0 * ramp * y * w, 4.0 * ramp * x * w

    def dirichlet(x, y, t):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()

    def initial(x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()

    return Problem("offset_circles", nu, force, dirichlet, initial,
                   mesh_file=mesh_file)


PROBLEMS = {
    "taylor_green": taylor_green,
    "vortex_square": vortex_square,
    "offset_circles": offset_circles,
}


def get_problem(name, **kwargs):
    if name not in PROBLEMS:
        raise ValueError("unknown problem %r (choices: %s)"
                         % (name, ", ".join(sorted(PROBLEMS))))
    return PROBLEMS[name](**kwargs)


def _fd1(g, z, h):
    return (-g(z + 2 * h) + 8 * g(z + h) - 8 * g(z - h) + g(z - 2 * h)) \
        / (12 * h)


def _fd2(g, z, h):
    return (-g(z + 2 * h) + 16 * g(z + h) - 30 * g(z) + 16 * g(z - h)
            - g(z - 2 * h)) / (12 * h ** 2)


def verify_forcing(problem, n_samples=200, h=1e-3, seed=0):
    """Check the forcing against the momentum equation by differencing.

    Evaluates u_t + (u . grad) u - nu lap(u) + grad p - f at random
    interior points and times, with every derivative of the exact fields
    replaced by a fourth-order central difference.  Returns the maximum
    absolute component of the residual; for a correctly derived force
    this is pure truncation error, around 1e-9 at h = 1e-3.
    """
    if problem.exact_u is None:
        raise ValueError("problem %r has no exact solution to verify"
                         % problem.name)
    if problem.domain is None:
        raise ValueError("verify_forcing needs a rectangle domain")
    (x0, y0), (x1, y1) = problem.domain
    rng = np.random.default_rng(seed)
    x = rng.uniform(x0 + 2 * h, x1 - 2 * h, n_samples)
    y = rng.uniform(y0 + 2 * h, y1 - 2 * h, n_samples)
    t = rng.uniform(0.1, 2.0, n_samples)

    u = problem.exact_u
    u1, u2 = u(x, y, t)
    u1_t = _fd1(lambda s: u(x, y, s)[0], t, h)
    u2_t = _fd1(lambda s: u(x, y, s)[1], t, h)
    u1_x = _fd1(lambda s: u(s, y, t)[0], x, h)
    u2_x = _fd1(lambda s: u(s, y, t)[1], x, h)
    u1_y = _fd1(lambda s: u(x, s, t)[0], y, h)
    u2_y = _fd1(lambda s: u(x, s, t)[1], y, h)
    lap1 = _fd2(lambda s: u(s, y, t)[0], x, h) \
        + _fd2(lambda s: u(x, s, t)[0], y, h)
    lap2 = _fd2(lambda s: u(s, y, t)[1], x, h) \
        + _fd2(lambda s: u(x, s, t)[1], y, h)
    if problem.exact_p is not None:
        p_x = _fd1(lambda s: problem.exact_p(s, y, t), x, h)
        p_y = _fd1(lambda s: problem.exact_p(x, s, t), y, h)
    else:
        p_x = p_y = 0.0

    f1, f2 = problem.force(x, y, t)
    r1 = u1_t + u1 * u1_x + u2 * u1_y - problem.nu * lap1 + p_x - f1
    r2 = u2_t + u1 * u2_x + u2 * u2_y - problem.nu * lap2 + p_y - f2
    return max(np.abs(r1).max(), np.abs(r2).max())
