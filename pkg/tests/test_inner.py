import math

import numpy as np
import pytest

from compapprox.errors import CapabilityError
from compapprox.geometry import dist_to_hull
from compapprox.inner import (ACTIVITY_TOL, Activation, AffineMapping,
                              MinSmoothMapping, NetworkForwardMapping,
                              NetworkLiftMapping, QuadraticArrayMapping,
                              SampleAverageMapping, build_network_lift,
                              inner_eval, inner_jacobian_element, resample)
from compapprox.outer import SquaredErrorOuter
from compapprox.rng import stream


def _two_piece():
    # pieces x and -x in one variable
    Z = np.zeros((1, 1))
    return MinSmoothMapping([[(Z, np.array([1.0]), 0.0), (Z, np.array([-1.0]), 0.0)]],
                            theta=None)


def test_min_exact_tie():
    F = _two_piece()
    assert inner_eval(F, np.array([0.0]))[0] == 0.0


def test_min_smoothed_tie_offset():
    F = _two_piece().with_theta(1.0)
    assert inner_eval(F, np.array([0.0]))[0] == pytest.approx(-math.log(2.0))


def test_min_smoothed_sandwich_at_point():
    F = _two_piece().with_theta(10.0)
    v = inner_eval(F, np.array([1.0]))[0]
    assert -1.0 - math.log(2.0) / 10.0 <= v <= -1.0


def test_smoothed_weights_tie_symmetry():
    F = _two_piece().with_theta(1.0)
    rep = inner_jacobian_element(F, np.array([0.0]))
    assert np.allclose(rep.weights[0], [0.5, 0.5])
    assert rep.matrix[0, 0] == pytest.approx(0.0)
    assert abs(rep.weights[0].sum() - 1.0) <= 1e-12


def test_affine_jacobian():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    F = AffineMapping(A, [0.0, 1.0])
    rep = inner_jacobian_element(F, np.array([5.0, -1.0]))
    assert np.allclose(rep.matrix, A)


def test_quadratic_jacobian_example():
    F = QuadraticArrayMapping([([[2.0]], [0.0], 0.0)])
    rep = inner_jacobian_element(F, np.array([3.0]))
    assert rep.matrix[0, 0] == pytest.approx(6.0)


def test_smoothing_sandwich_property():
    rng = stream(2024, "smoothing-sandwich")
    for _ in range(20):
        s = int(rng.integers(1, 5))
        n = int(rng.integers(1, 4))
        theta = float(rng.uniform(0.5, 30.0))
        pieces = []
        for _ in range(s):
            M = rng.normal(size=(n, n))
            pieces.append((M + M.T, rng.normal(size=n), float(rng.normal())))
        F = MinSmoothMapping([pieces], None)
        Fs = F.with_theta(theta)
        for _ in range(50):
            x = rng.normal(scale=2.0, size=n)
            exact = F.eval(x)[0]
            sm = Fs.eval(x)[0]
            assert -1e-10 <= exact - sm <= math.log(s) / theta + 1e-10


def test_weight_decay_as_theta_doubles():
    # unique minimizing piece at x = 0.3: off-minimizer weights decay to 0
    F = _two_piece()
    x = np.array([0.3])
    prev = None
    for k in range(11):
        rep = inner_jacobian_element(F.with_theta(2.0**k), x)
        off = rep.weights[0][0]   # piece "x" has value 0.3 > -0.3
        if prev is not None:
            assert off <= prev + 1e-15
        prev = off
    assert prev <= 1e-8


def test_gradient_in_hull_of_pieces():
    rng = stream(31, "gradient-hull")
    for _ in range(10):
        n = int(rng.integers(1, 4))
        s = int(rng.integers(2, 4))
        pieces = []
        for _ in range(s):
            M = rng.normal(size=(n, n))
            pieces.append((M + M.T, rng.normal(size=n), float(rng.normal())))
        F = MinSmoothMapping([pieces], theta=float(rng.uniform(1.0, 20.0)))
        x = rng.normal(size=n)
        rep = inner_jacobian_element(F, x)
        grads = [Q @ x + q for Q, q, _ in pieces]
        d, exact = dist_to_hull(rep.matrix[0], np.array(grads))
        assert exact and d <= 1e-10


def test_jacobian_matches_central_differences():
    rng = stream(8, "jacobian-fd")
    mappings = [
        AffineMapping(rng.normal(size=(2, 3)), rng.normal(size=2)),
        QuadraticArrayMapping([(np.eye(3) * 2.0, rng.normal(size=3), 0.5)]),
        _two_piece().with_theta(3.0),
        NetworkForwardMapping(
            [([rng.normal(size=(3, 2)), rng.normal(size=(2, 3))],
              [rng.normal(size=3), rng.normal(size=2)])],
            Activation("softplus", 4.0)),
    ]
    for F in mappings:
        for _ in range(25):
            x = rng.normal(size=F.n)
            J = inner_jacobian_element(F, x).matrix
            fd = np.zeros_like(J)
            eps = 1e-6
            for j in range(F.n):
                e = np.zeros(F.n)
                e[j] = eps
                fd[:, j] = (F.eval(x + e) - F.eval(x - e)) / (2 * eps)
            denom = 1.0 + np.abs(J)
            assert np.max(np.abs(J - fd) / denom) <= 1e-5


def test_exact_min_activity_tolerance():
    F = _two_piece()
    rep = inner_jacobian_element(F, np.array([ACTIVITY_TOL / 4.0]))
    assert len(rep.active_grads[0]) == 2


def test_local_lipschitz_sanity():
    rng = stream(12, "lipschitz")
    F = _two_piece().with_theta(50.0)
    for _ in range(200):
        a = rng.uniform(-3, 3, size=1)
        b = a + rng.normal(scale=1e-4, size=1)
        quot = abs(F.eval(a)[0] - F.eval(b)[0]) / max(abs(a[0] - b[0]), 1e-300)
        assert quot <= 1e6


# ---------------------------------------------------------------------------
# sample averages


def test_sample_average_large_count_near_mean():
    F = SampleAverageMapping([[0.0]], [0.0], [[1.0]], [0.0], count=200000, seed=5)
    assert abs(F.eval(np.array([1.0]))[0]) <= 0.01


def test_sample_average_single_draw():
    F = SampleAverageMapping([[0.0]], [0.0], [[1.0]], [0.0], count=1, seed=9)
    v = F.eval(np.array([1.0]))[0]
    assert v in (-1.0, 1.0)


def test_sample_average_determinism():
    a = SampleAverageMapping([[1.0]], [0.5], [[1.0]], [0.0], count=32, seed=1234)
    b = SampleAverageMapping([[1.0]], [0.5], [[1.0]], [0.0], count=32, seed=1234)
    rng = stream(3, "determinism-probe")
    for _ in range(100):
        x = rng.normal(size=1)
        assert a.eval(x)[0] == b.eval(x)[0]


def test_resample_changes_draws_not_structure():
    a = SampleAverageMapping([[1.0]], [0.0], [[1.0]], [0.0], count=8, seed=1)
    b = resample(a, 64, 2)
    assert b.count == 64 and b.n == a.n and b.m == a.m
    mean = a.mean_mapping()
    assert np.allclose(mean.A, [[1.0]])


def test_resample_requires_sample_average():
    with pytest.raises(CapabilityError):
        resample(AffineMapping([[1.0]], [0.0]), 4, 0)


# ---------------------------------------------------------------------------
# networks


def test_relu_lift_examples():
    act = Activation("relu")
    lift = build_network_lift([[[1.0]]], [[0.0]], act, SquaredErrorOuter([0.0]))
    x = lift.lift_point(np.array([-2.0]))
    assert x[1] == 0.0
    assert np.allclose(lift.mapping.eval(x)[1:], 0.0)
    x = lift.lift_point(np.array([3.0]))
    assert x[1] == 3.0
    assert np.allclose(lift.mapping.eval(x)[1:], 0.0)


def test_softplus_lift_example():
    act = Activation("softplus", 10.0)
    lift = build_network_lift([[[1.0]]], [[0.0]], act, SquaredErrorOuter([0.0]))
    x = lift.lift_point(np.array([0.0]))
    assert x[1] == pytest.approx(math.log(2.0) / 10.0, abs=1e-15)
    assert act.gap_bound() == pytest.approx(math.log(2.0) / 10.0)


def test_lift_consistency_with_forward_pass():
    rng = stream(21, "lift-consistency")
    for _ in range(10):
        w1 = rng.normal(size=(4, 2))
        b1 = rng.normal(size=4)
        w2 = rng.normal(size=(3, 4))
        b2 = rng.normal(size=3)
        for act in (Activation("relu"), Activation("softplus", 6.0)):
            direct = NetworkForwardMapping([([w1, w2], [b1, b2])], act)
            lifted = NetworkLiftMapping([([w1, w2], [b1, b2])], act)
            x0 = rng.normal(size=2)
            full = lifted.lift_point(x0)
            out = lifted.block(full, 0, lifted.q)
            assert np.max(np.abs(out - direct.eval(x0))) <= 1e-12
            assert np.max(np.abs(lifted.eval(full)[direct.m:])) <= 1e-12


def test_relu_kink_reports_unit_interval():
    act = Activation("relu")
    assert act.deriv_options(0.0) == [0.0, 1.0]
    assert act.deriv_options(5e-15) == [0.0, 1.0]
    assert act.deriv_options(1.0) == [1.0]
    # on a lift row whose neuron sits exactly at the kink
    lifted = NetworkLiftMapping([([np.array([[1.0]])], [np.array([0.0])])], act)
    x = lifted.lift_point(np.array([0.0]))
    rep = lifted.jacobian(x)
    assert len(rep.active_grads[1]) == 2


def test_dimension_chain_mismatch_rejected():
    with pytest.raises(ValueError):
        NetworkForwardMapping([([np.ones((3, 2)), np.ones((2, 4))],
                                [np.zeros(3), np.zeros(2)])], Activation("relu"))
