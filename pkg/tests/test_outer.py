import math

import mpmath
import numpy as np
import pytest

from compapprox.errors import CapabilityError
from compapprox.outer import (AugLagrangianOuter, BlockSeparableOuter,
                              CuttingPlaneOuter, EqualityIndicatorOuter,
                              ExactPenaltyOuter, GoalOuter, HomotopyOuter,
                              InequalityIndicatorOuter, LinearOuter,
                              LogBarrierOuter, QuadPenaltyOuter,
                              SoftplusGoalOuter, SquaredErrorOuter, SupportOuter,
                              add_cut, check_midpoint_convexity, outer_prox,
                              outer_subdiff_1d, outer_value, softplus,
                              softplus_grad, subdiff_graph_1d)
from compapprox.rng import stream


def catalogue():
    return [
        GoalOuter([1.0, 2.0], [0.0, 1.0]),
        SoftplusGoalOuter([1.0, 2.0], [0.0, 1.0], 5.0),
        LinearOuter([1.0, -2.0]),
        SupportOuter([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]),
        EqualityIndicatorOuter(3),
        InequalityIndicatorOuter(3),
        AugLagrangianOuter([0.5, -1.0], 10.0),
        QuadPenaltyOuter(2.0, 3),
        ExactPenaltyOuter(5.0, 3),
        LogBarrierOuter(2.0, 3),
        HomotopyOuter(GoalOuter([1.0], [0.0]), 0.25),
        CuttingPlaneOuter(1, [([0.0], 0.0, [0.0]), ([1.0], 1.0, [2.0])]),
        SquaredErrorOuter([0.5, -0.5], 1.5),
        BlockSeparableOuter([LinearOuter([2.0]), ExactPenaltyOuter(1.0, 2)]),
    ]


# ---------------------------------------------------------------------------
# values


def test_aug_lagrangian_value_example():
    h = AugLagrangianOuter([0.0], 10.0)
    assert outer_value(h, [1.0, 0.2]) == pytest.approx(1.2)


def test_log_barrier_value_example():
    h = LogBarrierOuter(1.0, 2)
    assert outer_value(h, [0.0, -1.0]) == 0.0
    assert outer_value(h, [0.0, 0.5]) == math.inf


def test_support_value_example():
    h = SupportOuter([[1.0, 0.0], [0.0, 1.0]])
    assert outer_value(h, [3.0, 1.0]) == pytest.approx(3.0)


def test_equality_indicator_value():
    h = EqualityIndicatorOuter(2)
    assert outer_value(h, [4.0, 0.0]) == 4.0
    assert outer_value(h, [4.0, 1e-9]) == math.inf


# ---------------------------------------------------------------------------
# softplus


def test_softplus_at_zero():
    assert softplus(1.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)
    assert softplus_grad(1.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert softplus(10.0, 0.0) == pytest.approx(math.log(2.0) / 10.0, abs=1e-15)


def test_softplus_high_precision_oracle():
    # oracle: 50-digit evaluation of ln(1 + exp(theta*g))/theta
    mpmath.mp.dps = 50
    for theta, gamma in [(1.0, 10.0), (1.0, -7.5), (20.0, 0.3), (1e4, 1e-3)]:
        ref = float(mpmath.log(1 + mpmath.e**(theta * gamma)) / theta)
        assert softplus(theta, gamma) == pytest.approx(ref, rel=1e-14)
    assert softplus(1.0, 10.0) == pytest.approx(10.0000453989, abs=1e-9)


def test_softplus_uniform_bound_property():
    gammas = np.linspace(-50.0, 50.0, 100001)
    for theta in (1.0, 10.0, 100.0, 1e4, 1e6):
        gap = np.abs(softplus(theta, gammas) - np.maximum(0.0, gammas))
        assert float(np.max(gap)) <= math.log(2.0) / theta + 1e-12
        assert abs(softplus(theta, 0.0) - math.log(2.0) / theta) <= 1e-12


def test_softplus_grad_strictly_inside_unit_interval():
    vals = softplus_grad(1e6, np.array([-100.0, -1.0, 0.0, 1.0, 100.0]))
    assert np.all(vals > 0.0) and np.all(vals < 1.0)


# ---------------------------------------------------------------------------
# subdifferential intervals


def test_goal_subdiff_intervals():
    h = GoalOuter([2.0], [1.0])
    assert outer_subdiff_1d(h, 0, 1.0) == (0.0, 2.0)
    assert outer_subdiff_1d(h, 0, 0.0) == (0.0, 0.0)
    assert outer_subdiff_1d(h, 0, 2.0) == (2.0, 2.0)


def test_exact_penalty_subdiff_finite_difference_oracle():
    h = ExactPenaltyOuter(5.0, 2)
    lo, hi = outer_subdiff_1d(h, 1, 0.0)
    # one-sided slopes of theta*|t| at 0
    eps = 1e-7
    left = (5.0 * abs(0.0) - 5.0 * abs(-eps)) / eps
    right = (5.0 * abs(eps) - 0.0) / eps
    assert lo == pytest.approx(left, abs=1e-6)
    assert hi == pytest.approx(right, abs=1e-6)
    assert (lo, hi) == (-5.0, 5.0)


def test_support_subdiff_not_separable():
    h = SupportOuter([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(CapabilityError):
        outer_subdiff_1d(h, 0, 0.0)


def test_subgradient_inequality_property():
    rng = stream(123, "subgradient-inequality")
    for h in catalogue():
        for _ in range(40):
            z = h.sample_domain_point(rng)
            zp = h.sample_domain_point(rng)
            vz, vzp = h.value(z), h.value(zp)
            if math.isinf(vz) or math.isinf(vzp):
                continue
            subs = []
            if h.separable:
                lohsi = [h.subdiff_1d(i, float(z[i])) for i in range(h.m)]
                if any(iv is None for iv in lohsi):
                    continue
                los = np.array([iv[0] for iv in lohsi])
                his = np.array([iv[1] for iv in lohsi])
                if not (np.all(np.isfinite(los)) and np.all(np.isfinite(his))):
                    continue
                subs = [los, his]
            else:
                subs = list(h.subdiff_generators(z, 0.0))
            for v in subs:
                assert vzp >= vz + float(np.dot(v, zp - z)) - 1e-9 * (1 + abs(vz) + abs(vzp))


# ---------------------------------------------------------------------------
# prox


def test_prox_examples():
    h = LinearOuter([2.0, -1.0])
    z = np.array([1.0, 1.0])
    assert np.allclose(outer_prox(h, z, 0.5), z - 0.5 * np.array([2.0, -1.0]))
    hp = ExactPenaltyOuter(1.0, 2)
    w = outer_prox(hp, np.array([0.0, 0.3]), 1.0)
    assert w[1] == 0.0
    hq = QuadPenaltyOuter(1.0, 2)
    w = outer_prox(hq, np.array([0.0, -2.0]), 1.0)
    assert w[1] == -2.0


def test_log_barrier_prox_unsupported():
    with pytest.raises(CapabilityError):
        outer_prox(LogBarrierOuter(1.0, 2), np.array([0.0, -1.0]), 1.0)


def test_prox_optimality_property():
    rng = stream(77, "prox-optimality")
    for h in catalogue():
        if not (h.prox_available and h.separable):
            continue
        for _ in range(25):
            z = h.sample_domain_point(rng)
            step = float(rng.uniform(0.1, 2.0))
            w = h.prox(z, step)
            for i in range(h.m):
                iv = h.subdiff_1d(i, float(w[i]), 1e-10)
                assert iv is not None
                target = -(w[i] - z[i]) / step
                assert iv[0] - 1e-8 <= target <= iv[1] + 1e-8


def test_support_prox_optimality():
    h = SupportOuter([[1.0, 0.0], [0.0, 1.0]])
    rng = stream(78, "support-prox")
    for _ in range(20):
        z = rng.normal(scale=2.0, size=2)
        step = float(rng.uniform(0.2, 2.0))
        w = h.prox(z, step)
        d, _ = h.subdiff_distance(-(w - z) / step, w, 1e-9)
        assert d <= 1e-8


def test_softplus_goal_prox_newton():
    h = SoftplusGoalOuter([2.0], [1.0], 7.0)
    z = np.array([1.4])
    step = 0.7
    w = h.prox(z, step)
    # optimality: w - z + step * h'(w) = 0 to the stated 1e-12
    resid = w[0] - z[0] + step * float(h.grad(w)[0])
    assert abs(resid) <= 1e-12 * (1 + abs(w[0]))


# ---------------------------------------------------------------------------
# graphs


def test_equality_indicator_graph():
    g = subdiff_graph_1d(EqualityIndicatorOuter(2), 1)
    assert len(g.pieces) == 1
    p = g.pieces[0]
    assert p.is_vertical and p.z_lo == 0.0
    assert p.v_lo == -math.inf and p.v_hi == math.inf


def test_aug_lagrangian_graph_line():
    g = subdiff_graph_1d(AugLagrangianOuter([0.0], 10.0), 1)
    p = g.pieces[0]
    assert p.slope == 10.0 and p.intercept == 0.0


def test_goal_graph_matches_dense_interval_sampling():
    h = GoalOuter([1.0], [0.0])
    g = subdiff_graph_1d(h, 0)
    assert len(g.pieces) == 3
    # oracle: every sampled (z, subdiff endpoint) lies on the graph
    for z in np.linspace(-2, 2, 401):
        lo, hi = h.subdiff_1d(0, float(z))
        for v in (lo, hi):
            on = any(pc.z_lo - 1e-12 <= z <= pc.z_hi + 1e-12
                     and pc.v_lo - 1e-12 <= v <= pc.v_hi + 1e-12
                     for pc in g.pieces)
            assert on


def test_graph_monotonicity_property():
    rng = stream(99, "graph-monotonicity")
    for h in catalogue():
        if not h.separable:
            continue
        for i in range(h.m):
            try:
                g = h.graph_1d(i)
            except CapabilityError:
                continue
            pts = []
            for pc in g.clipped(50.0):
                for s in rng.random(8):
                    pts.append(pc.point_at(float(s)))
            for (z1, v1) in pts:
                for (z2, v2) in pts:
                    assert (z1 - z2) * (v1 - v2) >= -1e-12


# ---------------------------------------------------------------------------
# cutting planes


def test_single_tangent_model():
    model = CuttingPlaneOuter(1)
    model = add_cut(model, [0.0], 0.0, [0.0], target=lambda z: float(z[0] ** 2))
    for z in np.linspace(-3, 3, 13):
        assert model.value([z]) == 0.0


def test_three_tangent_model_matches_max_oracle():
    target = lambda z: float(z[0] ** 2)
    model = CuttingPlaneOuter(1)
    for anchor in (-1.0, 0.0, 1.0):
        model = add_cut(model, [anchor], anchor**2, [2 * anchor], target=target)
    assert model.value([2.0]) == pytest.approx(3.0)
    # oracle: direct maximum of the three tangents
    for z in np.linspace(-3, 3, 61):
        direct = max(a**2 + 2 * a * (z - a) for a in (-1.0, 0.0, 1.0))
        assert model.value([z]) == pytest.approx(direct, abs=1e-12)


def test_cutting_plane_minorant_and_monotone():
    rng = stream(55, "cutting-plane")
    target = lambda z: float(np.sum(z**2))
    model = CuttingPlaneOuter(2)
    prev_vals = None
    probes = rng.normal(scale=2.0, size=(30, 2))
    for _ in range(6):
        anchor = rng.normal(scale=1.5, size=2)
        model = add_cut(model, anchor, target(anchor), 2 * anchor, target=target)
        vals = np.array([model.value(z) for z in probes])
        assert np.all(vals <= np.array([target(z) for z in probes]) + 1e-9)
        assert model.value(anchor) == pytest.approx(target(anchor), abs=1e-12)
        if prev_vals is not None:
            assert np.all(vals >= prev_vals - 1e-12)
        prev_vals = vals


def test_bad_cut_rejected():
    model = CuttingPlaneOuter(1)
    with pytest.raises(ValueError):
        add_cut(model, [1.0], 5.0, [2.0], target=lambda z: float(z[0] ** 2))
    with pytest.raises(ValueError):
        # correct value, invalid slope: overshoots the target nearby
        add_cut(model, [1.0], 1.0, [7.0], target=lambda z: float(z[0] ** 2))


def test_cutting_plane_dense_anchor_convergence():
    # models built on a low-discrepancy anchor sequence converge pointwise
    from compapprox.consistency import low_discrepancy_points

    target = lambda z: float(np.sum(z**2))
    anchors = low_discrepancy_points(2, 3.0, 256)
    assert len(anchors) >= 128
    model = CuttingPlaneOuter(2)
    probes = low_discrepancy_points(2, 2.0, 40)
    gaps = []
    for chunk in (8, 32, 128):
        while len(model.cuts) < chunk:
            a = anchors[len(model.cuts)]
            model = add_cut(model, a, target(a), 2 * a, target=target)
        gaps.append(max(target(z) - model.value(z) for z in probes))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] <= 0.2


# ---------------------------------------------------------------------------
# family-level properties


def test_quad_penalty_below_indicator_and_monotone():
    h_pen = QuadPenaltyOuter(100.0, 3)
    h_ind = InequalityIndicatorOuter(3)
    rng = stream(42, "penalty-ordering")
    for _ in range(200):
        z = rng.normal(scale=2.0, size=3)
        assert h_pen.value(z) <= h_ind.value(z)
        zbar = z + np.abs(rng.normal(scale=0.5, size=3))
        assert h_pen.value(z) <= h_pen.value(zbar) + 1e-12


def test_midpoint_convexity_across_catalogue():
    rng = stream(7, "midpoint-convexity")
    for h in catalogue():
        tested = check_midpoint_convexity(h, rng, samples=60)
        assert tested > 0


def test_support_subdiff_distance_at_three_way_tie():
    h = SupportOuter([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    z = np.zeros(3)   # all three points tie
    mid = np.full(3, 1.0 / 3.0)
    d, exact = h.subdiff_distance(mid, z)
    assert exact and d <= 1e-12
    outside = np.array([1.0, 1.0, 1.0])
    d, exact = h.subdiff_distance(outside, z)
    # distance from (1,1,1) to the simplex is |(1,1,1) - (1/3,...)| = 2/sqrt(3)
    assert exact and d == pytest.approx(2.0 / math.sqrt(3.0))


def test_support_points_validated():
    with pytest.raises(ValueError):
        SupportOuter([[0.5, 0.2]])
    with pytest.raises(ValueError):
        SupportOuter([[1.2, -0.2]])


def test_homotopy_subdiff_delegation():
    base = GoalOuter([1.0], [0.0])
    h = HomotopyOuter(base, 0.25)
    assert h.subdiff_1d(0, 0.0) == (0.0, 0.75)
    assert h.subdiff_1d(1, 3.0) == (0.25, 0.25)
