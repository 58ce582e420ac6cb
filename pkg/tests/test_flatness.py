import math

import numpy as np
import pytest

from flatcoupling.checks import random_bundle, round_trip_deviation, sparsity_violations
from flatcoupling.downwash import DownwashParams
from flatcoupling.errors import SingularInverseError
from flatcoupling.flatness import build_joint_diffeo, flat_jets_from_points, forward_flat_state
from flatcoupling.graph import CouplingGraph, build_graph, info_set
from flatcoupling.jets import Jet
from flatcoupling.oracles import quad_force
from flatcoupling.plant import (
    ApproximateDownwashCoupling,
    DownwashCoupling,
    NominalCoupling,
    PlanarQuadrotor,
    QuadParams,
    hover_state,
    joint_dynamics,
)
from flatcoupling.sim import rk4_step

Q = QuadParams()
QUAD = PlanarQuadrotor(Q)
G = Q.gravity


def constant_bundle(positions, order=4):
    return {
        i: [Jet.constant(p[0], order), Jet.constant(p[1], order)] for i, p in enumerate(positions)
    }


def diffeo(bundle, model, t=0.0):
    y = bundle.jets(t, QUAD.r)
    x0 = np.zeros((bundle.n, 4, 2))
    x0[:, 0] = bundle.position(t)
    return build_joint_diffeo(y, QUAD, model, build_graph(x0, model))


def test_inverse_map_examples():
    assert QUAD.inverse_level_map(1, None, [0.0, 0.0]) == pytest.approx([G, 0.0])
    thrust, theta = QUAD.inverse_level_map(1, None, [-G, 0.0])
    assert thrust == pytest.approx(math.sqrt(2) * G, rel=1e-15)
    assert theta == pytest.approx(math.pi / 4, rel=1e-15)
    assert QUAD.level_dynamics(1, None, [thrust, theta]) == pytest.approx([-G, 0.0], abs=1e-14)


def test_inverse_map_round_trip(rng):
    for _ in range(200):
        T, th = rng.uniform(0.5, 30), rng.uniform(-math.pi, math.pi)
        back = QUAD.inverse_level_map(1, None, QUAD.level_dynamics(1, None, [T, th]))
        assert back[0] == pytest.approx(T, rel=1e-12)
        assert math.remainder(back[1] - th, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_free_fall_is_singular():
    y = {0: [Jet([0.0, 0, 0, 0, 0]), Jet([5.0, 0, -G / 2, 0, 0])]}
    with pytest.raises(SingularInverseError) as info:
        build_joint_diffeo(y, QUAD, NominalCoupling(), CouplingGraph(1))
    assert info.value.subsystem == 0 and info.value.level == 2


def test_hover_thrust_compensates_downwash():
    positions = [(0.0, 3.0), (0.0, 2.0), (0.0, 1.0)]
    model = DownwashCoupling(Q)
    x0 = hover_state(positions, np.zeros((3, 2)), Q)
    out = build_joint_diffeo(constant_bundle(positions), QUAD, model, build_graph(x0, model))
    dw = DownwashParams()
    t1 = Q.mass * G
    t2 = Q.mass * G - quad_force(0.0, 1.0, t1, dw)
    t3 = Q.mass * G - quad_force(0.0, 2.0, t1, dw) - quad_force(0.0, 1.0, t2, dw)
    np.testing.assert_allclose(out.states[:, 2, 0], [t1, t2, t3], rtol=1e-12)
    np.testing.assert_allclose(out.states[:, 2, 1], 0.0, atol=1e-15)
    np.testing.assert_allclose(out.inputs, 0.0, atol=1e-12)


def test_nominal_collapse(rng):
    bundle = random_bundle(rng, n=3)
    joint = diffeo(bundle, NominalCoupling())
    y = bundle.jets(0.0, QUAD.r)
    for i in range(3):
        single = build_joint_diffeo({0: y[i]}, QUAD, NominalCoupling(), CouplingGraph(1))
        assert np.array_equal(single.states[0], joint.states[i])
        assert np.array_equal(single.inputs[0], joint.inputs[i])


@pytest.mark.parametrize("torque", [False, True])
def test_derivative_consistency(rng, torque):
    model = DownwashCoupling(Q, torque=torque)
    for _ in range(5):
        bundle = random_bundle(rng, n=4, spacing=0.7)
        out = diffeo(bundle, model)
        f = joint_dynamics(out.states, out.inputs, model, QUAD)
        for i in range(4):
            for k in range(4):
                rates = [c.shift().value for c in out.phi[i][k]]
                np.testing.assert_allclose(rates, f[i, k], rtol=1e-10, atol=1e-10)


def test_round_trip_open_loop(rng):
    for model in (DownwashCoupling(Q), DownwashCoupling(Q, torque=True)):
        for _ in range(2):
            assert round_trip_deviation(random_bundle(rng, n=3), QUAD, model) < 1e-6


def test_round_trip_detects_a_wrong_model(rng):
    """Integrating under exact physics with nominal-model inputs must drift."""
    bundle = random_bundle(rng, n=3, spread=0.05)
    y = bundle.jets(0.0, QUAD.r)
    x0 = np.zeros((3, 4, 2))
    x0[:, 0] = bundle.position(0.0)
    nominal = build_joint_diffeo(y, QUAD, NominalCoupling(), CouplingGraph(3))
    exact = build_joint_diffeo(y, QUAD, DownwashCoupling(Q), build_graph(x0, DownwashCoupling(Q)))
    assert not np.allclose(nominal.states[1:, 2], exact.states[1:, 2])


def test_sparsity_exact_and_approximate(rng):
    for _ in range(5):
        assert sparsity_violations(rng, DownwashCoupling(Q), QUAD) == 0
        assert sparsity_violations(rng, ApproximateDownwashCoupling((1.0, 1.0), Q), QUAD) == 0


def test_sparsity_sets_are_not_trivial(rng):
    """Some info sets must be strict subsets, or the bitwise test proves nothing."""
    model = ApproximateDownwashCoupling((1.0, 1.0), Q)
    strict = 0
    for _ in range(5):
        bundle = random_bundle(rng, n=5, spacing=0.6, spread=0.8)
        x0 = np.zeros((5, 4, 2))
        x0[:, 0] = bundle.position(0.0)
        g = build_graph(x0, model)
        strict += sum(len(info_set(g, i, k, model)) < len(info_set(g, i, 5, "lower"))
                      for i in range(5) for k in range(1, 6))
    assert strict > 0


def test_in_set_perturbation_changes_output(rng):
    model = DownwashCoupling(Q)
    positions = [(0.0, 2.0), (0.1, 1.0)]
    y = constant_bundle(positions)
    g = build_graph(hover_state(positions, np.zeros((2, 2)), Q), model)
    base = build_joint_diffeo(y, QUAD, model, g).states[1, 2, 0]
    y[0][1] = Jet([2.0, 0.0, 0.3, 0.0, 0.0])
    assert build_joint_diffeo(y, QUAD, model, g).states[1, 2, 0] != base


def test_forward_flat_state_hover():
    x = hover_state([[1.0, 2.0]], np.zeros((1, 2)), Q)
    z = forward_flat_state(x, QUAD, NominalCoupling(), CouplingGraph(1))
    np.testing.assert_allclose(z[0], [1.0, 2.0, 0, 0, 0, 0, 0, 0], atol=1e-15)


def test_forward_flat_state_analytic_trajectory():
    t0 = 0.4
    derivs = np.array([
        [math.sin(t0), math.cos(t0), -math.sin(t0), -math.cos(t0), math.sin(t0)],
        [math.cos(t0), -math.sin(t0), -math.cos(t0), math.sin(t0), math.cos(t0)],
    ])
    y = {0: [Jet.from_derivatives(d) for d in derivs]}
    out = build_joint_diffeo(y, QUAD, NominalCoupling(), CouplingGraph(1))
    z = forward_flat_state(out.states, QUAD, NominalCoupling(), CouplingGraph(1))
    np.testing.assert_allclose(z[0], derivs[:, :4].T.ravel(), atol=1e-9)


def test_forward_flat_state_coupled_pair_acceleration():
    model = DownwashCoupling(Q)
    x = hover_state([[0.0, 1.8], [0.2, 1.0]], [[0.3, 0.0], [-0.2, 0.1]], Q)
    x[:, 2, 1] = [0.05, -0.03]
    x[:, 3] = [[0.4, 0.1], [-0.2, 0.2]]
    g = build_graph(x, model)
    z = forward_flat_state(x, QUAD, model, g)
    f = lambda s, v: joint_dynamics(s, v, model, QUAD)  # noqa: E731
    h = 1e-4
    u = np.zeros((2, 2))
    vel_rate = (rk4_step(f, x, u, h)[1, 1] - rk4_step(f, x, u, -h)[1, 1]) / (2 * h)
    np.testing.assert_allclose(z[1, 4:6], vel_rate, rtol=1e-4)
    nominal = forward_flat_state(x, QUAD, NominalCoupling(), CouplingGraph(2))
    assert z[1, 5] < nominal[1, 5]  # downwash pushes the lower vehicle down


def test_forward_flat_state_matches_diffeo_jets(rng):
    model = DownwashCoupling(Q)
    bundle = random_bundle(rng, n=3)
    out = diffeo(bundle, model)
    z = forward_flat_state(out.states, QUAD, model, build_graph(out.states, model))
    ref = bundle.derivatives(0.0, 4).transpose(0, 2, 1).reshape(3, 8)
    np.testing.assert_allclose(z, ref, rtol=1e-10, atol=1e-10)


def test_angle_unwrapping_follows_previous():
    positions = [(0.0, 1.0)]
    prev = hover_state(positions, np.zeros((1, 2)), Q)
    prev[0, 2, 1] = 2 * math.pi + 0.01
    y = {0: [Jet([0.0, 0, -0.1, 0, 0]), Jet([1.0, 0, 0, 0, 0])]}
    out = build_joint_diffeo(y, QUAD, NominalCoupling(), CouplingGraph(1), previous=prev)
    assert out.states[0, 2, 1] == pytest.approx(2 * math.pi + math.atan2(0.2, G), rel=1e-12)


def test_flat_jets_from_points_layout():
    z = np.arange(8.0)
    comps = flat_jets_from_points(z, [8.0, 9.0], 4, 2)
    np.testing.assert_allclose(comps[0].derivatives(), [0, 2, 4, 6, 8])
    np.testing.assert_allclose(comps[1].derivatives(), [1, 3, 5, 7, 9])


def test_round_trip_at_fine_step(rng):
    bundle = random_bundle(rng, n=3)
    assert round_trip_deviation(bundle, QUAD, DownwashCoupling(Q), dt=1e-3) < 1e-6
