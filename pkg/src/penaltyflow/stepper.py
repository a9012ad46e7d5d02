"""One-step solver for the penalty momentum system plus the time filter.

A step solves the velocity-only system

    (1/k) M u1 + N(u*) u1 + nu A u1 + (1/eps) G u1 = (1/k) M u_n + F(t+k)

with u* the second-order extrapolant of the two previous velocities, then
optionally improves u1 to second order with a variable-step time filter.
The filter and its divided-difference helper are plain array functions so
they can be exercised on scalar ODEs independently of any mesh.

Pressure never appears as an unknown: when a pressure is wanted it is
recovered afterwards from the divergence of the velocity.
"""

import numpy as np
import scipy.sparse.linalg as spla

from .fespace import Field
from .assembly import (assemble_mass, assemble_stiffness, assemble_graddiv,
                       assemble_convection, assemble_load,
                       assemble_div_coupling, assemble_p1_mass,
                       apply_dirichlet)
from .linsolve import solve


def extrapolate(u_n, u_nm1, tau):
    """Second-order prediction (1 + tau) u_n - tau u_nm1 of the velocity
    at the next time level, with tau the step ratio k_new / k_old."""
    return (1.0 + tau) * u_n - tau * u_nm1


def compute_D2(u1, u_n, u_nm1, k_new, k_old):
    """Variable-step second divided difference (scaled).

    For values sampled from a quadratic q(t) at t_n - k_old, t_n,
    t_n + k_new this evaluates to q'' * k_old * k_new; it vanishes on
    linear data.
    """
    w = k_old + k_new
    return (2.0 * k_old / w) * u1 - 2.0 * u_n + (2.0 * k_new / w) * u_nm1


def apply_time_filter(u1, d2, alpha1):
    """Filtered value u1 - (alpha1 / 2) d2; lifts the step to second
    order when alpha1 matches the current step ratio."""
    return u1 - 0.5 * alpha1 * d2


def discrete_accel(u_new, u_old, k):
    """Backward difference quotient (u_new - u_old) / k."""
    return (u_new - u_old) / k


class StepResult:
    """Solution attempt for one step at one (k, eps) pair."""

    def __init__(self, u1, report, N, t_new, k, eps, energy_residual=None):
        self.u1 = u1
        self.report = report
        self.N = N
        self.t_new = t_new
        self.k = k
        self.eps = eps
        self.energy_residual = energy_residual


class PenaltyStepper:
    """Holds the time-independent operators for one problem on one mesh.

    Parameters
    ----------
    V : FESpace
        Velocity space (vector quadratics).
    Q : FESpace
        Pressure recovery space (scalar linears) on the same mesh.
    problem : Problem
        Supplies viscosity, force, and boundary data.
    check_energy : bool
        When True every step also evaluates the discrete energy identity
        and stores its relative residual on the result.  Only meaningful
        for homogeneous Dirichlet data.
    method, rtol
        Linear solver choice and relative residual target, passed through
        to every step's solve.
    """

    def __init__(self, V, Q, problem, check_energy=False, method="lu",
                 rtol=1e-10):
        if V.mesh is not Q.mesh:
            raise ValueError("velocity and pressure spaces use different "
                             "meshes")
        self.V = V
        self.Q = Q
        self.problem = problem
        self.check_energy = check_energy
        self.method = method
        self.rtol = rtol
        self.M = assemble_mass(V)
        self.A = assemble_stiffness(V)
        self.G = assemble_graddiv(V)
        self.D = assemble_div_coupling(V, Q)
        self.Mq = assemble_p1_mass(Q)
        self._mq_lu = spla.splu(self.Mq.tocsc())
        self._load_memo = (None, None)

    # -- norms through the assembled forms (same quadrature as assembly)

    def l2_norm(self, u):
        return np.sqrt(max(u @ self.M @ u, 0.0))

    def grad_norm(self, u):
        return np.sqrt(max(u @ self.A @ u, 0.0))

    def div_norm(self, u):
        return np.sqrt(max(u @ self.G @ u, 0.0))

    def load(self, t):
        """Body-force load vector at time t (memoized on t: retries at a
        rejected step reuse it)."""
        t_memo, F = self._load_memo
        if t_memo != t:
            F = assemble_load(self.V, self.problem.force, t)
            self._load_memo = (t, F)
        return F

    def step(self, u_n, u_star, t_n, k, eps, N=None):
        """Advance u_n by one step of size k with penalty parameter eps.

        u_star is the convecting wind (extrapolated velocity); pass the
        previous result's N to skip reassembling the convection matrix
        when the wind did not change (an eps-only retry).

        Returns a StepResult carrying the unfiltered velocity u1.
        """
        if k <= 0 or eps <= 0:
            raise ValueError("step size and penalty parameter must be "
                             "positive")
        V = self.V
        if N is None:
            N = assemble_convection(V, Field(V, u_star))
        t_new = t_n + k
        S = (1.0 / k) * self.M + N + self.problem.nu * self.A \
            + (1.0 / eps) * self.G
        F = self.load(t_new)
        rhs = (1.0 / k) * (self.M @ u_n) + F
        S_bc, rhs_bc = apply_dirichlet(S.tocsr(), rhs, V,
                                       self.problem.dirichlet, t_new)
        report = solve(S_bc, rhs_bc, method=self.method, rtol=self.rtol)
        u1 = report.x
        energy = None
        if self.check_energy and report.converged:
            energy = self.energy_residual(u1, u_n, k, eps, F)
        return StepResult(u1, report, N, t_new, k, eps, energy)

    def energy_residual(self, u1, u_n, k, eps, F):
        """Relative defect in the discrete energy identity

        (||u1||^2 - ||u_n||^2)/2 + ||u1 - u_n||^2/2 + k nu |u1|_1^2
            + (k/eps) ||div u1||^2 - k (F, u1) = 0,

        which the unfiltered step satisfies to solver precision for
        homogeneous Dirichlet data because the convection form is
        exactly skew on zero-trace fields.
        """
        d = u1 - u_n
        terms = np.array([
            0.5 * (u1 @ self.M @ u1 - u_n @ self.M @ u_n),
            0.5 * (d @ self.M @ d),
            k * self.problem.nu * (u1 @ self.A @ u1),
            (k / eps) * (u1 @ self.G @ u1),
            -k * (F @ u1),
        ])
        scale = np.abs(terms).max()
        if scale == 0.0:
            return 0.0
        return abs(terms.sum()) / scale

    def recover_pressure(self, u, eps):
        """Pressure consistent with the penalty relation: the linear
        field p with (div u + eps p, q) = 0 for every test function q."""
        rhs = -(self.D @ u) / eps
        return Field(self.Q, self._mq_lu.solve(rhs))

    def penalty_relation_residual(self, u, p, eps):
        """max_i |(div u + eps p, q_i)| over the pressure basis."""
        r = self.D @ u + eps * (self.Mq @ p)
        return np.abs(r).max()
