"""Enhanced proximal composite algorithm.

Outer loop over approximating problems (X^nu, h^nu, F^nu) with vanishing
certification tolerances delta^nu; inner proximal-linearization loop with an
adaptively controlled proximal parameter lambda. Each outer index records a
certified near-stationary triple: either a subproblem fixed point (Step 4) or
a triple whose explicit residual vectors u, w satisfy
max{||u||, ||w|| + r_sub} <= delta^nu (Step 5), where r_sub is the certified
inexactness of the subproblem solve.

Subproblems minimize h(F(x_bar) + dF(x_bar)(x - x_bar)) + ||x - x_bar||^2 /
(2 lambda) over X. Two solvers cover the catalogue: projected gradient with
backtracking when h is differentiable, and a primal-dual (Chambolle-Pock)
splitting driven by h's conjugate prox otherwise. Setting lambda = inf drops
the proximal term, which turns the splitting solver into a direct solver for
composite problems with affine F.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, EvaluationError, NonconvergenceError
from .geometry import ClosedSet, normal_cone_residual
from .model import CompositeProblem, ResidualTriple, StationarityTriple, stationarity_residual
from .outer import KINK_TOL, OuterFunction

_LAMBDA_FLOOR = 1e-16


@dataclass
class EpcaConfig:
    x0: np.ndarray
    tau: float = 2.0
    sigma: float = 0.5
    lam_bar: float = 1.0
    lam0: float = 1.0
    delta_schedule: tuple = ()
    inner_iteration_cap: int = 200
    subproblem_tolerance_factor: float = 0.1
    subproblem_iteration_cap: int = 400_000

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if not self.tau > 1.0:
            raise ValueError("tau must exceed 1")
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        if not self.lam_bar > 0.0:
            raise ValueError("lam_bar must be positive")
        if not 0.0 < self.lam0 <= self.lam_bar:
            raise ValueError("lam0 must lie in (0, lam_bar]")
        if any(d <= 0 for d in self.delta_schedule):
            raise ValueError("delta schedule must be strictly positive")
        if not 0.0 < self.subproblem_tolerance_factor < 1.0:
            raise ValueError("subproblem_tolerance_factor must lie in (0, 1)")


@dataclass(frozen=True)
class Stage:
    """One approximating problem in the outer schedule."""

    X: ClosedSet
    h: OuterFunction
    F: object
    parameter: float = math.nan


@dataclass
class TraceEntry:
    nu: int
    parameter: float
    triple: StationarityTriple
    residual: ResidualTriple
    inner_iterations: int
    lam_final: float
    objective: float
    exit: str                      # "step4" or "step5"
    delta: float
    certificate: tuple = None      # (||u||, ||w||, r_sub) for step5 exits
    #: h^nu(F^nu(.)) at the warm start and after every accepted inner step
    objective_path: tuple = ()


@dataclass
class EpcaTrace:
    entries: list = field(default_factory=list)

    def final(self) -> TraceEntry:
        return self.entries[-1]


@dataclass
class SubproblemResult:
    x: np.ndarray
    y: np.ndarray
    residual: float
    iterations: int


def _model_point(c, J, x, x_bar):
    return c + J @ (x - x_bar)


def _certificate(X, h, c, J, x_bar, lam, x, y):
    """max of the two membership residuals of the subproblem optimality inclusion."""
    d = J.T @ y
    if math.isfinite(lam):
        d = d + (x - x_bar) / lam
    r_cone = normal_cone_residual(X, x, -d)
    r_sub, _ = h.subdiff_distance(y, _model_point(c, J, x, x_bar), KINK_TOL)
    return max(r_cone, r_sub)


def _solve_smooth(X, h, c, J, x_bar, lam, tol, max_iter):
    """Projected gradient with backtracking, plus a fixed-step local phase.

    Backtracking certifies sufficient decrease while objective differences are
    resolvable; once they sink below floating-point resolution, the iteration
    switches to a fixed step at the last Armijo-accepted size (a local
    curvature estimate), where plain gradient arithmetic still contracts.
    Gross divergence in the fixed-step phase is caught by a coarse value test.
    """
    x = X.project(x_bar)

    def model(xx):
        val = h.value(_model_point(c, J, xx, x_bar))
        if math.isfinite(lam):
            d = xx - x_bar
            val += 0.5 * (d @ d) / lam
        return val

    val = model(x)
    if math.isinf(val):
        raise EvaluationError("subproblem start lies outside dom h")
    t = 1.0
    t_ref = None
    fixed_step = False
    window_best = math.inf
    since_improve = 0
    best = (math.inf, x, None)
    for it in range(1, max_iter + 1):
        y = h.grad(_model_point(c, J, x, x_bar))
        g = J.T @ y
        if math.isfinite(lam):
            g = g + (x - x_bar) / lam
        cert = max(normal_cone_residual(X, x, -g), 0.0)
        if cert < best[0]:
            best = (cert, x.copy(), y.copy())
        if cert <= tol:
            return SubproblemResult(x, y, cert, it)
        if fixed_step:
            # residual-trend control: halve the step when the certificate stalls
            if cert < 0.999 * window_best:
                window_best = cert
                since_improve = 0
            else:
                since_improve += 1
                if since_improve > 30:
                    t_ref *= 0.5
                    since_improve = 0
                    window_best = cert
                    if t_ref < 1e-18:
                        raise NonconvergenceError("fixed-step phase collapsed",
                                                  best=best[1], residual=best[0])
            x_new = X.project(x - t_ref * g)
            if math.isinf(model(x_new)):
                t_ref *= 0.5
                continue
            x = x_new
            continue
        accepted = False
        while t >= 1e-18:
            x_new = X.project(x - t * g)
            step = x_new - x
            val_new = model(x_new)
            if val_new <= val + g @ step + (step @ step) / (2.0 * t) + 1e-15 * (1.0 + abs(val)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            t = max(t, 1e-18)
            val_new = val
            x_new = x
        if t_ref is None or accepted:
            t_ref = t
        # objective differences below resolution: switch to the fixed-step phase
        if not accepted or (val - val_new) < 1e-13 * (1.0 + abs(val)):
            fixed_step = True
            window_best = cert
            since_improve = 0
        x, val = x_new, val_new
        t = min(t * 2.0, 1e8)
    raise NonconvergenceError("projected-gradient subproblem hit its iteration cap",
                              best=best[1], residual=best[0])


def _solve_splitting(X, h, c, J, x_bar, lam, tol, max_iter, y0=None):
    m, n = J.shape
    L = float(np.linalg.norm(J, 2))
    step = 0.9 / L if L > 0 else 1.0
    sig = tau = step
    co = c - J @ x_bar
    x = X.project(x_bar)
    p = np.zeros(m) if y0 is None else np.asarray(y0, dtype=float).copy()
    x_tilde = x.copy()
    check_every = 10
    best = (math.inf, x.copy(), p.copy())
    for it in range(1, max_iter + 1):
        s = p + sig * (J @ x_tilde) + sig * co
        p = s - sig * h.prox(s / sig, 1.0 / sig)
        v = x - tau * (J.T @ p)
        x_prev = x
        if math.isfinite(lam):
            x = X.project((lam * v + tau * x_bar) / (lam + tau))
        else:
            x = X.project(v)
        x_tilde = 2.0 * x - x_prev
        if it % check_every == 0 or it == max_iter:
            cert = _certificate(X, h, c, J, x_bar, lam, x, p)
            if cert < best[0]:
                best = (cert, x.copy(), p.copy())
            if cert <= tol:
                return SubproblemResult(x, p, cert, it)
    raise NonconvergenceError("primal-dual subproblem hit its iteration cap",
                              best=best[1], residual=best[0])


def solve_subproblem(X: ClosedSet, h: OuterFunction, c, J, x_bar, lam: float,
                     tol: float, max_iter: int = 400_000, y0=None) -> SubproblemResult:
    """Solve min_{x in X} h(c + J(x - x_bar)) + ||x - x_bar||^2/(2 lam).

    Returns the primal point, a multiplier y with y in dh(model point), and the
    certified fixed-point residual: the max of the normal-cone projection
    residual of -(J'y + (x - x_bar)/lam) at x and the distance of y to the
    subdifferential at the model point. lam = inf drops the proximal term.
    """
    c = np.asarray(c, dtype=float)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    x_bar = np.asarray(x_bar, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    if h.smooth:
        return _solve_smooth(X, h, c, J, x_bar, lam, tol, max_iter)
    if not h.prox_available:
        raise EvaluationError(f"{type(h).__name__} supports neither gradient nor prox")
    return _solve_splitting(X, h, c, J, x_bar, lam, tol, max_iter, y0)


def sufficient_decrease_test(h: OuterFunction, F, x_bar, x_star, J, sigma: float) -> bool:
    """Step 3: actual decrease of h(F(.)) must reach sigma times the model decrease."""
    v_bar = h.value(F.eval(x_bar))
    v_star = h.value(F.eval(x_star))
    v_model = h.value(_model_point(F.eval(x_bar), np.atleast_2d(J), x_star, x_bar))
    if math.isinf(v_bar) or math.isinf(v_star) or math.isinf(v_model):
        raise EvaluationError("Step 3 requires real values of the approximating objective")
    return v_bar - v_star >= sigma * (v_bar - v_model) - 1e-14 * (1.0 + abs(v_bar))


def extract_multipliers_step4(h: OuterFunction, F, X: ClosedSet, x_star,
                              tol: float, y_hint=None):
    """Step 4 multipliers at a subproblem fixed point, with certification.

    Smooth h gives y = grad h(z) uniquely; otherwise the subproblem dual
    iterate is used. Both the subdifferential membership and the normal-cone
    inclusion are re-checked; failure raises CertificationError carrying the
    two residuals.
    """
    x_star = np.asarray(x_star, dtype=float)
    z = F.eval(x_star)
    if h.smooth:
        y = h.grad(z)
    else:
        if y_hint is None:
            raise CertificationError("nonsmooth h needs the subproblem dual iterate")
        y = np.asarray(y_hint, dtype=float)
    v_dist, _ = h.subdiff_distance(y, z, KINK_TOL)
    report = F.jacobian(x_star)
    w_dist = normal_cone_residual(X, x_star, -(report.matrix.T @ y))
    cert_tol = tol + 1e-10
    if v_dist > cert_tol or w_dist > cert_tol:
        raise CertificationError(
            f"step-4 certification failed: v={v_dist:.3e}, w={w_dist:.3e}, tol={cert_tol:.3e}",
            residuals=(v_dist, w_dist))
    return y, z


def step5_residuals(F, x_prev, x_next, z_next, y_next, lam: float):
    """Step 5 residual vectors u = F(x+) - z+ and the Jacobian-difference w."""
    x_prev = np.asarray(x_prev, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    u = F.eval(x_next) - np.asarray(z_next, dtype=float)
    J_next = F.jacobian(x_next).matrix
    J_prev = F.jacobian(x_prev).matrix
    w = (J_next - J_prev).T @ np.asarray(y_next, dtype=float) - (x_next - x_prev) / lam
    return u, w


def _level_boundedness_probe(stage: Stage, x_bar):
    """Radius-growth heuristic for the level-boundedness hypothesis; warns only."""
    if stage.X.is_bounded():
        return
    level = stage.h.value(stage.F.eval(x_bar))
    if math.isinf(level):
        return
    n = stage.X.n
    for i in range(n):
        for sign in (1.0, -1.0):
            d = np.zeros(n)
            d[i] = sign
            for radius in (1e3, 1e6):
                pt = x_bar + radius * d
                if not stage.X.contains(pt, tol=1e-8):
                    continue
                if stage.h.value(stage.F.eval(pt)) <= level:
                    warnings.warn(
                        "approximating problem may not be level-bounded at its warm start",
                        RuntimeWarning)
                    return


def run_epca(stages, config: EpcaConfig, check_level_boundedness: bool = True) -> EpcaTrace:
    """Run EPCA across the approximation schedule, one certified triple per stage.

    Raises NonconvergenceError (carrying the partial trace) if an inner loop
    exceeds the iteration cap or lambda collapses below the floor.
    """
    stages = list(stages)
    if len(config.delta_schedule) < len(stages):
        raise ValueError("delta schedule shorter than the stage list")
    trace = EpcaTrace()
    x_prev = config.x0.copy()
    lam = config.lam0
    y_carry = None
    for nu, stage in enumerate(stages, start=1):
        delta = float(config.delta_schedule[nu - 1])
        subtol = config.subproblem_tolerance_factor * delta
        x_bar = stage.X.project(x_prev)
        if check_level_boundedness:
            _level_boundedness_probe(stage, x_bar)
        if y_carry is not None and y_carry.shape != (stage.F.m,):
            y_carry = None
        obj_path = [stage.h.value(stage.F.eval(x_bar))]
        inner = 0
        while True:
            inner += 1
            if inner > config.inner_iteration_cap:
                raise NonconvergenceError(
                    f"inner iteration cap exceeded at outer index {nu}",
                    best=x_bar, partial_trace=trace)
            c = stage.F.eval(x_bar)
            J = stage.F.jacobian(x_bar).matrix
            try:
                sub = solve_subproblem(stage.X, stage.h, c, J, x_bar, lam, subtol,
                                       max_iter=config.subproblem_iteration_cap,
                                       y0=y_carry)
            except NonconvergenceError as err:
                err.partial_trace = trace
                raise
            x_star, y_star = sub.x, sub.y
            y_carry = y_star
            if np.linalg.norm(x_star - x_bar) <= 1e-12 * (1.0 + np.linalg.norm(x_bar)):
                y, z = extract_multipliers_step4(stage.h, stage.F, stage.X, x_star,
                                                 subtol, y_hint=y_star)
                triple = StationarityTriple(x_star, y, z)
                obj_path.append(stage.h.value(z))
                _record(trace, nu, stage, triple, inner, lam, delta, "step4", None,
                        obj_path)
                x_prev = x_star
                break
            if sufficient_decrease_test(stage.h, stage.F, x_bar, x_star, J, config.sigma):
                lam_next = min(config.tau * lam, config.lam_bar)
                z_bar = _model_point(c, J, x_star, x_bar)
                u, w = step5_residuals(stage.F, x_bar, x_star, z_bar, y_star, lam)
                u_norm, w_norm = float(np.linalg.norm(u)), float(np.linalg.norm(w))
                obj_path.append(stage.h.value(stage.F.eval(x_star)))
                if max(u_norm, w_norm + sub.residual) <= delta:
                    triple = StationarityTriple(x_star, y_star, z_bar)
                    _record(trace, nu, stage, triple, inner, lam, delta, "step5",
                            (u_norm, w_norm, sub.residual), obj_path)
                    lam = lam_next
                    x_prev = x_star
                    break
                x_bar = x_star
                lam = lam_next
            else:
                lam = lam / config.tau
                if lam < _LAMBDA_FLOOR:
                    raise NonconvergenceError(
                        f"lambda collapsed below {_LAMBDA_FLOOR} at outer index {nu}",
                        best=x_bar, partial_trace=trace)
    return trace


def _record(trace, nu, stage, triple, inner, lam, delta, exit_step, certificate,
            obj_path):
    problem = CompositeProblem(stage.X, stage.h, stage.F)
    residual = stationarity_residual(problem, triple)
    objective = stage.h.value(stage.F.eval(triple.x))
    trace.entries.append(TraceEntry(nu, stage.parameter, triple, residual, inner,
                                    lam, objective, exit_step, delta, certificate,
                                    tuple(obj_path)))


def solve_affine_composite(X: ClosedSet, h: OuterFunction, A, b,
                           tol: float = 1e-9, max_iter: int = 2_000_000,
                           y0=None) -> SubproblemResult:
    """Direct solve of min_{x in X} h(Ax + b): the exact model with no prox term.

    Used as an independent oracle for EPCA on convex instances (F affine makes
    the linearization exact, so the subproblem solver applied once at x_bar = 0
    with lam = inf solves the full problem).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    x_bar = np.zeros(A.shape[1])
    return solve_subproblem(X, h, b, A, x_bar, math.inf, tol, max_iter, y0=y0)
