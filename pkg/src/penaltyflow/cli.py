"""Experiment driver: configs in, CSV out.

A run is described by a plain-text ``key = value`` config; unknown keys
are rejected so a typo in a tolerance name cannot silently run with
defaults.  Each run produces ``timeseries.csv`` (one row per accepted
step) and ``summary.csv`` (final errors and counters) in the output
directory; convergence studies rerun one config over a list of step
sizes and add ``rates.csv``.

The time loop implements four controllers over the same penalty step:

    alg1-const-k   fixed step, penalty parameter adapted
    first-var-k    unfiltered first-order step, both adapted
    second-var-k   filtered second-order step, both adapted
    vsvo           variable step and order (picks filtered or not)

Determinism matters: identical configs must produce bitwise identical
CSV files, so the driver contains no randomness and all floats are
written with %.17g (round-trip exact).
"""

import argparse
import math
import os
import sys
import warnings

import numpy as np

from .mesh import load_mesh
from .fespace import build_space, interpolate, l2_error, Field, P2_VECTOR, \
    P1_SCALAR
from .problems import PROBLEMS, get_problem, verify_forcing
from .stepper import PenaltyStepper, extrapolate, compute_D2, \
    apply_time_filter
from .adapt import (Tolerances, MAX_REJECTS, est_epsilon, alpha1, alpha2,
                    est_time_first, second_diff_combo, est_time_second,
                    guard_floor, decide_alg1, decide_first, decide_second,
                    decide_vsvo)

CSV_HEADER = ("t,k,eps,order,est_e,test1,test2,div_u,grad_u,ut_norm,"
              "rejects,u_err_l2,u_err_linf,p_err_linf")
SUMMARY_HEADER = ("problem,algorithm,steps,rejects,t_final,"
                  "u_err_l2,u_err_linf,p_err_linf")
RATES_HEADER = "k,u_err_l2,rate"

ALGORITHMS = ("alg1-const-k", "first-var-k", "second-var-k", "vsvo")

_BOOL_WORDS = {"on": True, "true": True, "1": True, "yes": True,
               "off": False, "false": False, "0": False, "no": False}


class ConfigError(ValueError):
    pass


class RunConfig:
    """Validated settings for one run.

    Built from a config file (``from_file``) or keyword overrides
    (``RunConfig(problem=..., algorithm=...)``); every field has the
    documented default except problem and algorithm, which are required.
    """

    _DEFAULTS = {
        "problem": None,
        "algorithm": None,
        "mesh": 48,
        "nu": None,
        "k0": 0.05,
        "eps0": 1e-6,
        "t_end": 1.0,
        "tol": 1e-6,
        "min_tol": None,
        "eps_min": 1e-8,
        "eps_max": 1e-5,
        "alpha": 2.0,
        "ttol": 1e-5,
        "min_ttol": None,
        "safety": 0.9,
        "guard": True,
        "filter": True,
        "solver": "lu",
        "solver_tol": 1e-10,
        "out_dir": None,
        "seed": 0,
        "eps_drop_time": None,
        "eps_drop_factor": 100.0,
    }

    def __init__(self, **kw):
        for key, default in self._DEFAULTS.items():
            setattr(self, key if key != "filter" else "filter_on",
                    kw.pop(key, default))
        if kw:
            raise ConfigError("unknown config key%s: %s"
                              % ("s" if len(kw) > 1 else "",
                                 ", ".join(sorted(kw))))
        self._validate()

    def _validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError("problem must be one of: %s (got %r)"
                              % (", ".join(sorted(PROBLEMS)), self.problem))
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm must be one of: %s (got %r)"
                              % (", ".join(ALGORITHMS), self.algorithm))
        if not (isinstance(self.mesh, str) or
                (isinstance(self.mesh, int) and self.mesh >= 1)):
            raise ConfigError("mesh must be a positive cell count or a "
                              "mesh file path")
        for key in ("k0", "t_end"):
            if not getattr(self, key) > 0:
                raise ConfigError("%s must be positive" % key)
        self.tolerances()  # raises on a bad tolerance combination
        if not (self.eps_min <= self.eps0 <= self.eps_max):
            raise ConfigError("eps0 must lie in [eps_min, eps_max]")
        if not self.filter_on and self.algorithm != "alg1-const-k":
            raise ConfigError("filter = off is only meaningful for "
                              "alg1-const-k (the order-1 control run)")
        if self.solver not in ("lu", "gmres"):
            raise ConfigError("solver must be lu or gmres")
        if self.eps_drop_factor < 1:
            raise ConfigError("eps_drop_factor must be >= 1")
        if self.out_dir is None:
            self.out_dir = "%s_%s_out" % (self.problem, self.algorithm)

    def tolerances(self):
        return Tolerances(tol=self.tol, min_tol=self.min_tol,
                          eps_min=self.eps_min, eps_max=self.eps_max,
                          alpha=self.alpha, ttol=self.ttol,
                          min_ttol=self.min_ttol, safety=self.safety)

    @classmethod
    def from_file(cls, path):
        kw = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError("%s: line %d: expected key = value"
                                      % (path, lineno))
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                if key not in cls._DEFAULTS:
                    raise ConfigError("%s: line %d: unknown config key %r"
                                      % (path, lineno, key))
                if key in kw:
                    raise ConfigError("%s: line %d: duplicate key %r"
                                      % (path, lineno, key))
                try:
                    kw[key] = cls._convert(key, value)
                except ConfigError:
                    raise
                except ValueError as exc:
                    raise ConfigError("%s: line %d: bad value for %s: %s"
                                      % (path, lineno, key, exc))
        return cls(**kw)

    @staticmethod
    def _convert(key, value):
        if key in ("problem", "algorithm", "solver", "out_dir"):
            return value
        if key in ("guard", "filter"):
            if value.lower() not in _BOOL_WORDS:
                raise ValueError("expected on/off, got %r" % value)
            return _BOOL_WORDS[value.lower()]
        if key == "seed":
            return int(value)
        if key == "mesh":
            try:
                return int(value)
            except ValueError:
                return value  # a mesh file path
        return float(value)


def parse_config(path):
    """Read and validate a config file; raises ConfigError on any
    unknown key, malformed line, or inconsistent setting."""
    return RunConfig.from_file(path)


def _build_problem(cfg):
    kw = {}
    if cfg.nu is not None:
        kw["nu"] = cfg.nu
    return get_problem(cfg.problem, **kw)


def _build_mesh(cfg, prob):
    if isinstance(cfg.mesh, str):
        return load_mesh(cfg.mesh)
    return prob.make_mesh(cfg.mesh)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return "%d" % value
    return "%.17g" % value


class _Row:
    __slots__ = ("t", "k", "eps", "order", "est_e", "test1", "test2",
                 "div_u", "grad_u", "ut_norm", "rejects", "u_err_l2",
                 "u_err_linf", "p_err_linf")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw[name])

    def line(self):
        return ",".join(_fmt(getattr(self, name)) for name in self.__slots__)


def _nodal_linf(u_diff):
    return float(np.abs(u_diff).max())


def _pressure_error_linf(st, p_h, t, exact_p):
    """Max nodal pressure error after aligning the means: the penalty
    pressure has mean fixed by the boundary flux (zero here), while the
    exact pressures carry an arbitrary additive gauge."""
    Q = st.Q
    ones = np.ones(Q.dof_count)
    vol = ones @ st.Mq @ ones
    mean_h = (ones @ st.Mq @ p_h) / vol
    p_ex = np.asarray(exact_p(Q.dof_coords[:, 0], Q.dof_coords[:, 1], t),
                      dtype=float)
    mean_ex = (ones @ st.Mq @ p_ex) / vol
    return float(np.abs((p_h - mean_h) - (p_ex - mean_ex)).max())


def _time_loop(cfg, prob, st, tols):
    """Run the adaptive loop to t_end; returns (rows, total_rejects)."""
    V = st.V
    alg = cfg.algorithm
    exact = prob.exact_u is not None
    u_n = interpolate(V, lambda x, y, t: prob.initial(x, y)).coeffs
    k = cfg.k0
    u_nm1 = interpolate(V, prob.exact_u, t=-k).coeffs if exact \
        else u_n.copy()
    k_prev = k
    eps = cfg.eps0
    t = 0.0
    d2_prev = None
    k_prev2 = None
    rows = []
    total_rejects = 0
    t_final = cfg.t_end - 1e-12 * max(1.0, cfg.t_end)
    step_index = 0
    drop_pending = cfg.eps_drop_time is not None

    while t < t_final:
        step_index += 1
        first = step_index == 1
        eps_anchor = eps        # last accepted value, anchors the guard
        rejects = 0
        N = None
        n_k = None              # step size the cached wind matrix is for

        while True:
            k_att = min(k, cfg.t_end - t)
            if drop_pending and t >= cfg.eps_drop_time:
                # injected controller fault: a one-off collapse of the
                # penalty parameter, used to exercise the guard
                eps = max(eps / cfg.eps_drop_factor, tols.eps_min)
                if cfg.guard:
                    eps = max(eps, guard_floor(eps_anchor, k_att, tols))
                drop_pending = False
            tau = k_att / k_prev
            if first and not exact:
                u_star = u_n    # no usable history: plain backward Euler
            else:
                u_star = extrapolate(u_n, u_nm1, tau)
            res = st.step(u_n, u_star, t, k_att, eps,
                          N=N if n_k == k_att else None)
            if not res.report.converged:
                raise RuntimeError(
                    "linear solve failed at t=%.6g (k=%.3e, eps=%.3e): "
                    "residual %.3e via %s" % (t, k_att, eps,
                                              res.report.residual,
                                              res.report.method))
            N, n_k = res.N, k_att

            d2 = compute_D2(res.u1, u_n, u_nm1, k_att, k_prev)
            a1 = alpha1(tau)
            apply_filter = cfg.filter_on and alg != "first-var-k" \
                and not (first and not exact)
            u_filt = apply_time_filter(res.u1, d2, a1) if apply_filter \
                else None

            test1 = est_time_first(st.l2_norm(d2), a1)
            if d2_prev is not None:
                a2 = alpha2(k_prev / k_prev2, tau)
                combo = second_diff_combo(d2, d2_prev, k_att, k_prev,
                                          k_prev2)
                test2 = est_time_second(st.l2_norm(combo), a2)
            else:
                test2 = None

            cand = u_filt if u_filt is not None else res.u1
            div_n = st.div_norm(cand)
            grad_n = st.grad_norm(cand)
            est = est_epsilon(div_n, grad_n)

            if alg == "alg1-const-k":
                dec = decide_alg1(est, eps, k_att, tols, cfg.guard,
                                  eps_anchor)
            elif alg == "first-var-k":
                dec = decide_first(est, test1, eps, k_att, tols,
                                   cfg.guard, eps_anchor)
            elif alg == "second-var-k":
                if test2 is None:
                    # no second-difference history yet: fall back to the
                    # first-order estimator for this decision only
                    dec = decide_first(est, test1, eps, k_att, tols,
                                       cfg.guard, eps_anchor)
                else:
                    dec = decide_second(est, test2, eps, k_att, tols,
                                        cfg.guard, eps_anchor)
            else:
                dec = decide_vsvo(est, test1,
                                  math.inf if test2 is None else test2,
                                  eps, k_att, tols, cfg.guard,
                                  eps_anchor)

            if not dec.accepted and rejects < MAX_REJECTS:
                rejects += 1
                total_rejects += 1
                eps = dec.eps
                k = dec.k
                continue
            if not dec.accepted:
                warnings.warn("step %d at t=%.6g forced through after %d "
                              "rejections (est=%.3e, test1=%.3e)"
                              % (step_index, t, rejects, est, test1))
                dec.accepted = True
                dec.eps = eps
                dec.k = k_att

            # -- accepted
            if alg == "vsvo":
                if dec.order is not None and u_filt is not None:
                    order = dec.order
                else:
                    # forced accept carries no order; first step has no
                    # filtered candidate
                    order = 2 if u_filt is not None else 1
            elif alg == "first-var-k":
                order = 1
            else:
                order = 2 if u_filt is not None else 1
            u_acc = u_filt if order == 2 else res.u1
            t_new = res.t_new
            ut_norm = st.l2_norm(u_acc - u_n) / k_att

            if exact:
                u_err_l2 = l2_error(Field(V, u_acc), prob.exact_u, t_new)
                u_ex = interpolate(V, prob.exact_u, t=t_new).coeffs
                u_err_linf = _nodal_linf(u_acc - u_ex)
                p_h = st.recover_pressure(u_acc, eps)
                p_err_linf = _pressure_error_linf(st, p_h.coeffs, t_new,
                                                  prob.exact_p)
            else:
                u_err_l2 = u_err_linf = p_err_linf = None

            rows.append(_Row(t=t_new, k=k_att, eps=eps, order=order,
                             est_e=est, test1=test1, test2=test2,
                             div_u=div_n, grad_u=grad_n, ut_norm=ut_norm,
                             rejects=rejects, u_err_l2=u_err_l2,
                             u_err_linf=u_err_linf,
                             p_err_linf=p_err_linf))

            if not (first and not exact):
                d2_prev = d2
            k_prev2 = k_prev
            k_prev = k_att
            u_nm1 = u_n
            u_n = u_acc
            t = t_new
            eps = dec.eps
            k = dec.k
            break

    return rows, total_rejects


def run_experiment(cfg):
    """Run one configured experiment; writes timeseries.csv and
    summary.csv under cfg.out_dir and returns the summary as a dict."""
    prob = _build_problem(cfg)
    mesh = _build_mesh(cfg, prob)
    V = build_space(mesh, P2_VECTOR)
    Q = build_space(mesh, P1_SCALAR)
    st = PenaltyStepper(V, Q, prob, method=cfg.solver, rtol=cfg.solver_tol)
    rows, total_rejects = _time_loop(cfg, prob, st, cfg.tolerances())

    os.makedirs(cfg.out_dir, exist_ok=True)
    ts_path = os.path.join(cfg.out_dir, "timeseries.csv")
    with open(ts_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.line() + "\n")

    last = rows[-1] if rows else None
    summary = {
        "problem": cfg.problem,
        "algorithm": cfg.algorithm,
        "steps": len(rows),
        "rejects": total_rejects,
        "t_final": last.t if last else 0.0,
        "u_err_l2": last.u_err_l2 if last else None,
        "u_err_linf": last.u_err_linf if last else None,
        "p_err_linf": last.p_err_linf if last else None,
    }
    with open(os.path.join(cfg.out_dir, "summary.csv"), "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        fh.write(",".join([summary["problem"], summary["algorithm"],
                           "%d" % summary["steps"],
                           "%d" % summary["rejects"],
                           _fmt(summary["t_final"]),
                           _fmt(summary["u_err_l2"]),
                           _fmt(summary["u_err_linf"]),
                           _fmt(summary["p_err_linf"])]) + "\n")
    return summary


def _study_worker(args):
    cfg_kw, k = args
    cfg_kw = dict(cfg_kw)
    cfg_kw["k0"] = k
    cfg_kw["out_dir"] = os.path.join(cfg_kw["out_dir"], "k_%.17g" % k)
    summary = run_experiment(RunConfig(**cfg_kw))
    return k, summary["u_err_l2"]


def _worker_count(n_jobs):
    env = os.environ.get("PENALTYFLOW_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError("PENALTYFLOW_THREADS must be an integer, "
                              "got %r" % env)
        if cap < 1:
            raise ConfigError("PENALTYFLOW_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(n_jobs, cap))


def convergence_study(cfg, steps):
    """Run cfg once per step size and fit successive convergence rates.

    Writes each run under out_dir/k_<value>/ plus a combined rates.csv;
    returns a list of (k, error, rate-or-None) sorted as given.  The
    problem must have an exact solution.
    """
    if get_problem(cfg.problem).exact_u is None:
        raise ConfigError("convergence study needs a problem with an "
                          "exact solution, not %r" % cfg.problem)
    if len(steps) < 2:
        raise ConfigError("need at least two step sizes")
    if any(k <= 0 for k in steps):
        raise ConfigError("step sizes must be positive")

    cfg_kw = {key: getattr(cfg, key if key != "filter" else "filter_on")
              for key in RunConfig._DEFAULTS}
    jobs = [(cfg_kw, k) for k in steps]
    workers = _worker_count(len(jobs))
    if workers == 1:
        results = [_study_worker(job) for job in jobs]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_study_worker, jobs))

    table = []
    prev_k = prev_err = None
    for k, err in results:
        rate = None
        if prev_k is not None and err > 0 and prev_err > 0:
            rate = math.log(prev_err / err) / math.log(prev_k / k)
        table.append((k, err, rate))
        prev_k, prev_err = k, err

    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "rates.csv"), "w") as fh:
        fh.write(RATES_HEADER + "\n")
        for k, err, rate in table:
            fh.write("%s,%s,%s\n" % (_fmt(k), _fmt(err), _fmt(rate)))
    return table


def _cmd_run(args):
    cfg = parse_config(args.config)
    summary = run_experiment(cfg)
    err = ("u_err_l2=%s" % _fmt(summary["u_err_l2"])
           if summary["u_err_l2"] is not None else "no exact solution")
    print("%s %s: %d steps, %d rejects, t=%.6g, %s -> %s"
          % (summary["problem"], summary["algorithm"], summary["steps"],
             summary["rejects"], summary["t_final"], err, cfg.out_dir))
    return 0


def _cmd_rates(args):
    cfg = parse_config(args.config)
    try:
        steps = [float(tok) for tok in args.steps.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError("--steps expects a comma-separated list of "
                          "numbers, got %r" % args.steps)
    table = convergence_study(cfg, steps)
    for k, err, rate in table:
        print("k=%-12s err=%-22s rate=%s"
              % (_fmt(k), _fmt(err), "-" if rate is None else "%.4f" % rate))
    return 0


def _cmd_verify(args):
    prob = get_problem(args.problem)
    residual = verify_forcing(prob, n_samples=200, seed=0)
    print("verify_forcing(%s): max residual %.3e" % (args.problem, residual))
    return 0 if residual < 1e-6 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="penaltyflow",
        description="Adaptive penalty solver for 2D incompressible flow")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.set_defaults(func=_cmd_run)

    p_rates = sub.add_parser("rates", help="convergence study over step "
                                           "sizes")
    p_rates.add_argument("config")
    p_rates.add_argument("--steps", required=True,
                         help="comma-separated step sizes, e.g. "
                              "0.1,0.05,0.025")
    p_rates.set_defaults(func=_cmd_rates)

    p_verify = sub.add_parser("verify", help="check a problem's forcing "
                                             "against its exact solution")
    p_verify.add_argument("problem", choices=sorted(PROBLEMS))
    p_verify.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, RuntimeError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
