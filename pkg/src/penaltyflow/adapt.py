"""Controllers that adapt the penalty parameter and the time step.

Everything here is pure scalar logic: the driver computes norms of the
relevant fields and feeds them in, the decision functions answer with
"accept or retry, and at which (eps, k, order)".  Keeping the controllers
free of mesh and matrix state makes every branch testable by hand
arithmetic.

Two estimators drive the decisions:

* ``est_epsilon``: the dimensionless ratio ||div u|| / ||grad u||, which
  measures how badly incompressibility is violated relative to the size
  of the flow.  Too large means the penalty parameter must shrink; very
  small means it may relax.
* ``est_time_first`` / ``est_time_second``: local-truncation-error
  estimates for the unfiltered (first-order) and filtered (second-order)
  step, both computed from scaled second differences of the velocity
  history at no extra solves.

The constant-step controller (``decide_alg1``) only moves eps.  The
variable-step controllers move both, and the variable-order one
additionally picks whichever order would allow the larger next step.

A rejected attempt may propose eps and k equal to the current values
when the floors (eps_min, the stability guard, the half-step clamp) bite
simultaneously; the decision functions detect that no progress is
possible and accept instead, which reproduces the CONTINUE escape of the
constant-step decision tree at eps = eps_min.  Drivers should still cap
consecutive rejections (see MAX_REJECTS) since an estimator can stay
bad while (eps, k) keep inching around the clamps.
"""

import math
import warnings

# forced-accept cap on consecutive rejections of a single step
MAX_REJECTS = 10


class Tolerances:
    """Tolerance and bound settings for both controllers.

    tol / min_tol band the divergence estimator, ttol / min_ttol band the
    temporal estimators; min_* default to a tenth of their upper value.
    eps_min / eps_max clamp the penalty parameter, alpha sets how fast
    eps may shrink per unit time, and safety deflates step predictions.
    """

    def __init__(self, tol=1e-6, min_tol=None, eps_min=1e-8, eps_max=1e-5,
                 alpha=2.0, ttol=1e-5, min_ttol=None, safety=0.9):
        self.tol = float(tol)
        self.min_tol = self.tol / 10.0 if min_tol is None else float(min_tol)
        self.eps_min = float(eps_min)
        self.eps_max = float(eps_max)
        self.alpha = float(alpha)
        self.ttol = float(ttol)
        self.min_ttol = (self.ttol / 10.0 if min_ttol is None
                         else float(min_ttol))
        self.safety = float(safety)
        if not (0.0 < self.min_tol <= self.tol):
            raise ValueError("need 0 < min_tol <= tol")
        if not (0.0 < self.min_ttol <= self.ttol):
            raise ValueError("need 0 < min_ttol <= ttol")
        if not (0.0 < self.eps_min <= self.eps_max):
            raise ValueError("need 0 < eps_min <= eps_max")


class Decision:
    """Controller verdict for one solution attempt.

    accepted : bool, take the attempt or redo the step
    eps : penalty parameter for the retry (reject) or next step (accept)
    k : step size for the retry or next step
    order : 1 take the unfiltered velocity, 2 take the filtered one
    grew : True when the accept also relaxed the tolerancing (eps or k)
    reason : short text for logs
    """

    def __init__(self, accepted, eps, k, order, grew=False, reason=""):
        self.accepted = accepted
        self.eps = eps
        self.k = k
        self.order = order
        self.grew = grew
        self.reason = reason

    def __repr__(self):
        verb = "accept" if self.accepted else "reject"
        return ("Decision(%s, eps=%.3e, k=%.3e, order=%s, reason=%r)"
                % (verb, self.eps, self.k, self.order, self.reason))


def est_epsilon(div_norm, grad_norm):
    """Relative incompressibility defect ||div u|| / ||grad u||.

    The ratio is dimension-free and invariant under scaling of u.  A
    motionless field has no meaningful defect: return 0 with a warning
    so a silent 0/0 cannot steer the controller unnoticed.
    """
    if div_norm < 0 or grad_norm < 0:
        raise ValueError("norms must be nonnegative")
    if grad_norm == 0.0:
        if div_norm == 0.0:
            warnings.warn("velocity gradient is identically zero; "
                          "divergence estimator undefined, using 0")
            return 0.0
        raise ValueError("nonzero divergence with zero gradient is not a "
                         "valid norm pair")
    return div_norm / grad_norm


def alpha1(tau):
    """Filter coefficient making the filtered step second order at step
    ratio tau; equals 2/3 for constant steps."""
    return tau * (1.0 + tau) / (1.0 + 2.0 * tau)


def alpha2(tau_prev, tau):
    """Leading coefficient of the filtered step's local error in terms of
    the last two step ratios; equals 10/9 for constant steps."""
    num = tau_prev * (tau * tau_prev + tau_prev + 1.0) \
        * (4.0 * tau ** 3 + 5.0 * tau ** 2 + tau)
    den = 3.0 * (tau_prev * tau ** 2 + 4.0 * tau_prev * tau + 2.0 * tau
                 + tau_prev + 1.0)
    return num / den


def est_time_first(d2_norm, a1):
    """LTE estimate of the unfiltered step: half the filter correction."""
    return 0.5 * a1 * d2_norm


def second_diff_combo(d2_new, d2_old, k_new, k_mid, k_old):
    """Weighted difference of consecutive scaled second differences whose
    norm feeds the second-order LTE estimate (a third-derivative proxy).
    """
    w = k_new + k_mid + k_old
    return (3.0 * k_old / w) * d2_new - (3.0 * k_new / w) * d2_old


def est_time_second(combo_norm, a2):
    """LTE estimate of the filtered step from the combined differences."""
    return a2 / 6.0 * combo_norm


def shrink_eps(eps, k, tols):
    """Rejection update for the penalty parameter: the gentlest of the
    stability-motivated factor (1 - alpha k) and halving, floored at
    eps_min."""
    return max((1.0 - tols.alpha * k) * eps, 0.5 * eps, tols.eps_min)


def grow_eps(eps, tols):
    """Relaxation update: double, capped at eps_max."""
    return min(2.0 * eps, tols.eps_max)


def guard_floor(eps_accepted, k, tols):
    """Lowest eps the stability guard admits for the coming accepted
    value, relative to the last accepted one.  Nonpositive (no bound)
    for large steps."""
    return (1.0 - tols.alpha * k) * eps_accepted


def _propose_step(k, test, ttol, exponent, tols):
    """Step prediction safety * k * (ttol/test)^exponent, clamped to
    [0.5, 2] times k.  A vanishing estimator predicts an unbounded step;
    the clamp turns that into plain doubling."""
    if test <= 0.0:
        raw = math.inf
    else:
        raw = tols.safety * k * (ttol / test) ** exponent
    return max(min(raw, 2.0 * k), 0.5 * k)


def decide_alg1(est, eps, k, tols, guard=False, eps_accepted=None):
    """Constant-step controller: eps moves, k never does.

    Rejects while the divergence estimator is at or above tol and eps can
    still shrink; relaxes eps when the estimator sits at or below
    min_tol.  The solution is always the filtered (second-order) one.
    """
    if est >= tols.tol and eps > tols.eps_min:
        new_eps = shrink_eps(eps, k, tols)
        if guard:
            new_eps = max(new_eps, guard_floor(eps_accepted, k, tols))
        if new_eps < eps:
            return Decision(False, new_eps, k, None, reason="est>=tol")
        # floors forbid any further shrink: continue with what we have
    if est <= tols.min_tol:
        return Decision(True, grow_eps(eps, tols), k, 2, grew=True,
                        reason="est<=min_tol")
    return Decision(True, eps, k, 2)


def _decide_variable(est, test, exponent, order, eps, k, tols, guard,
                     eps_accepted):
    """Shared single-order variable-step decision tree.

    A divergence-estimator breach can only force a rejection while eps
    can still shrink (the floors and the guard may pin it); retrying an
    identical eps would loop forever, so a pinned breach is tolerated
    and eps keeps walking down across accepted steps instead.  A time
    breach always rejects, since the step can always shrink.

    All step proposals are based on the step the estimator was measured
    at (the current attempt).  Basing retries on the last accepted step
    instead deadlocks when that step is far too large: the proposal then
    oscillates around a fixed point whose estimator never meets the
    tolerance.  An eps-only breach keeps the step entirely -- the time
    test passed, and holding k fixed keeps the guard floor stable so a
    guarded retry settles after a single notch instead of chasing a
    floor that moves with every re-predicted step.
    """
    new_eps = shrink_eps(eps, k, tols)
    if guard:
        new_eps = max(new_eps, guard_floor(eps_accepted, k, tols))
    est_bad = est > tols.tol and new_eps < eps
    time_bad = test > tols.ttol
    if est_bad or time_bad:
        if time_bad:
            new_k = _propose_step(k, test, tols.ttol, exponent, tols)
        else:
            new_k = k
        reasons = []
        if est_bad:
            reasons.append("est>tol")
        if time_bad:
            reasons.append("tEST>tTOL")
        return Decision(False, new_eps, new_k, None,
                        reason=",".join(reasons))
    if est < tols.min_tol or test < tols.min_ttol:
        new_k = _propose_step(k, test, tols.ttol, exponent, tols)
        # never relax eps while the divergence estimator is breached
        # (reachable only when the guard pinned it above)
        eps_out = grow_eps(eps, tols) if est <= tols.tol else eps
        return Decision(True, eps_out, new_k, order, grew=eps_out > eps,
                        reason="est<min_tol" if est < tols.min_tol
                        else "tEST<min_ttol")
    return Decision(True, eps, k, order)


def decide_first(est, test1, eps, k, tols, guard=False, eps_accepted=None):
    """Variable-step controller for the unfiltered first-order method."""
    return _decide_variable(est, test1, 0.5, 1, eps, k, tols, guard,
                            eps_accepted)


def decide_second(est, test2, eps, k, tols, guard=False, eps_accepted=None):
    """Variable-step controller for the filtered second-order method."""
    return _decide_variable(est, test2, 1.0 / 3.0, 2, eps, k, tols, guard,
                            eps_accepted)


def decide_vsvo(est, test1, test2, eps, k, tols, guard=False,
                eps_accepted=None):
    """Variable-step variable-order controller.

    Rejection consults the more optimistic of the two temporal estimators
    and retries at the larger of the two predicted steps; a rejection
    driven by the divergence estimator alone keeps the step.  On accept the
    order is picked by which method would allow the larger next step
    (ties go to second order); the step only actually changes when an
    estimator dips below its lower tolerance.  Pass test2 = math.inf on
    the first step, where no second-difference history exists.
    """
    tmin = min(test1, test2)
    new_eps = shrink_eps(eps, k, tols)
    if guard:
        new_eps = max(new_eps, guard_floor(eps_accepted, k, tols))
    est_bad = est > tols.tol and new_eps < eps
    time_bad = tmin > tols.ttol
    if est_bad or time_bad:
        if time_bad:
            s1 = _propose_step(k, test1, tols.ttol, 0.5, tols)
            s2 = _propose_step(k, test2, tols.ttol, 1.0 / 3.0, tols)
            new_k = max(s1, s2)
        else:
            new_k = k
        reasons = []
        if est_bad:
            reasons.append("est>tol")
        if time_bad:
            reasons.append("tEST>tTOL")
        return Decision(False, new_eps, new_k, None,
                        reason=",".join(reasons))
    s1 = _propose_step(k, test1, tols.ttol, 0.5, tols)
    s2 = _propose_step(k, test2, tols.ttol, 1.0 / 3.0, tols)
    order = 1 if s1 > s2 else 2
    if est < tols.min_tol or tmin < tols.min_ttol:
        eps_out = grow_eps(eps, tols) if est <= tols.tol else eps
        return Decision(True, eps_out, max(s1, s2), order,
                        grew=eps_out > eps,
                        reason="est<min_tol" if est < tols.min_tol
                        else "tEST<min_ttol")
    return Decision(True, eps, k, order)
