"""Approximation-family builders.

Each family turns the configured actual problem into the outer schedule of
approximating problems (X^nu, h^nu, F^nu) consumed by the solver, together
with the per-index driving parameter reported in the artifacts.
"""

from __future__ import annotations

import numpy as np

from ..epca import Stage
from ..errors import ConfigError
from ..inner import SampleAverageMapping
from ..model import ApproximationSchedule, CompositeProblem, ScheduleEntry
from ..outer import (AugLagrangianOuter, ExactPenaltyOuter, HomotopyOuter,
                     LogBarrierOuter, QuadPenaltyOuter, SoftplusGoalOuter,
                     SupportOuter)
from ..rng import stream
from .config import ExperimentConfig


def perturb_support_points(points, alpha):
    """Move each point a distance alpha toward the simplex barycenter.

    Keeps the points inside the probability simplex, so the perturbed list is
    again a valid ambiguity set, and makes the two-sided set excess equal to
    alpha whenever alpha is smaller than every point's distance to the
    barycenter.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    bary = np.full(pts.shape[1], 1.0 / pts.shape[1])
    out = []
    for p in pts:
        d = bary - p
        dist = float(np.linalg.norm(d))
        if dist <= alpha:
            out.append(bary)
        else:
            out.append(p + (alpha / dist) * d)
    return np.array(out)


def build_stages(cfg: ExperimentConfig):
    """Return (actual CompositeProblem, [Stage, ...]) for the configured family.

    The schedule's monotonicity invariants (theta nondecreasing, delta
    nonincreasing, homotopy lambda nonincreasing) are validated on the way out.
    """
    actual, stages = _build_stages(cfg)
    _schedule_for(cfg, stages)   # raises on a broken schedule
    return actual, stages


def _schedule_for(cfg: ExperimentConfig, stages) -> ApproximationSchedule:
    name = cfg.family["name"]
    deltas = cfg.delta_schedule()
    entries = []
    for stage, delta in zip(stages, deltas):
        theta, lam, size = 1.0, 0.0, None
        if name == "homotopy":
            lam = stage.parameter
        elif name == "support_perturb":
            theta = 1.0 / stage.parameter
        elif name == "sample_average":
            theta = stage.parameter
            size = int(stage.parameter)
        elif name != "identity":
            theta = stage.parameter
        entries.append(ScheduleEntry(theta=theta, lam_homotopy=lam, delta=delta,
                                     sample_size=size))
    return ApproximationSchedule(entries)


def _build_stages(cfg: ExperimentConfig):
    X = cfg.build_set()
    h = cfg.build_outer()
    F = cfg.build_inner()
    fam = cfg.family
    name = fam["name"]
    length = fam["length"]

    def thetas():
        return [fam["theta0"] * fam["theta_growth"] ** k for k in range(length)]

    if name == "identity":
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, h, F, parameter=float(k + 1)) for k in range(length)]
        return actual, stages

    if name == "softplus_goal":
        _require(h, "GoalOuter", name)
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, SoftplusGoalOuter(h.alpha, h.tau, th), F, parameter=th)
                  for th in thetas()]
        return actual, stages

    if name == "aug_lagrangian":
        _require(h, "EqualityIndicatorOuter", name)
        y_est = np.asarray(fam.get("y_estimate", [0.0] * (h.m - 1)), dtype=float)
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, AugLagrangianOuter(y_est, th), F, parameter=th)
                  for th in thetas()]
        return actual, stages

    if name == "quad_penalty":
        _require(h, "InequalityIndicatorOuter", name)
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, QuadPenaltyOuter(th, h.m), F, parameter=th) for th in thetas()]
        return actual, stages

    if name == "exact_penalty":
        _require(h, "EqualityIndicatorOuter", name)
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, ExactPenaltyOuter(th, h.m), F, parameter=th) for th in thetas()]
        return actual, stages

    if name == "log_barrier":
        _require(h, "InequalityIndicatorOuter", name)
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, LogBarrierOuter(th, h.m), F, parameter=th) for th in thetas()]
        return actual, stages

    if name == "homotopy":
        # actual problem: the base objective with the homotopy term switched off
        actual = CompositeProblem(X, HomotopyOuter(h, 0.0), F)
        lams = [fam["lam0"] * fam["lam_decay"] ** k for k in range(length)]
        stages = [Stage(X, HomotopyOuter(h, lam), F, parameter=lam) for lam in lams]
        return actual, stages

    if name == "support_perturb":
        _require(h, "SupportOuter", name)
        alphas = list(fam["alphas"])
        if len(alphas) != length:
            raise ConfigError([f"family {name}: alphas length must equal the family length"])
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, SupportOuter(perturb_support_points(h.points, a)), F,
                        parameter=float(a))
                  for a in alphas]
        return actual, stages

    if name == "min_smoothing":
        if F.__class__.__name__ != "MinSmoothMapping" or F.theta is not None:
            raise ConfigError([f"family {name}: inner mapping must be an exact min_smooth"])
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, h, F.with_theta(th), parameter=th) for th in thetas()]
        return actual, stages

    if name == "sample_average":
        if not isinstance(F, SampleAverageMapping):
            raise ConfigError([f"family {name}: inner mapping must be sample_average"])
        mean = F.mean_mapping()
        actual = CompositeProblem(X, h, mean)
        counts = [int(round(fam["count0"] * fam["count_growth"] ** k)) for k in range(length)]
        stages = []
        for k, count in enumerate(counts):
            seed = int(stream(cfg.seed, "sample-average-family", str(k)).integers(2**62))
            Fk = SampleAverageMapping(F.base.A, F.base.b, F.noise.A, F.noise.b,
                                      dist=F.dist, count=count, seed=seed)
            stages.append(Stage(X, h, Fk, parameter=float(count)))
        return actual, stages

    if name == "network_softplus":
        if F.__class__.__name__ != "NetworkForwardMapping":
            raise ConfigError([f"family {name}: inner mapping must be a network"])
        from ..inner import Activation, NetworkForwardMapping
        nets = [([A for A, _ in layers], [b for _, b in layers]) for layers in F.networks]
        actual = CompositeProblem(X, h, F)
        stages = [Stage(X, h, NetworkForwardMapping(nets, Activation("softplus", th)),
                        parameter=th)
                  for th in thetas()]
        return actual, stages

    raise ConfigError([f"unknown family {name!r}"])


def _require(h, class_name, family):
    if h.__class__.__name__ != class_name:
        raise ConfigError([f"family {family!r} requires the actual outer function "
                           f"to be {class_name}, got {h.__class__.__name__}"])
