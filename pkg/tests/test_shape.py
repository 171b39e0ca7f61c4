import math

import numpy as np
import pytest

from beacon_pursuit import (AssumptionViolation, ControlParams, InconsistentShape, ShapeState, closure_residual,
                            control_shape, enumerate_equilibria, extract_shape, reconstruct_world, shape_derivative)
from beacon_pursuit.equilibria import two_agent_row
from beacon_pursuit.frenet import beacon_spacing, full_state_derivative, rot
from beacon_pursuit.shape import (max_residual, shape_vector_field, spacing_from_shape, two_agent_constraints,
                                  two_agent_reduced_derivative)
from beacon_pursuit.simkit import SimConfig, integrate, rk4_step

from conftest import random_params, random_world, shape_gap

PI = math.pi


def test_control_vanishes_on_aligned_state():
    p = ControlParams(0.4, 1.0, 2.0, [0.3, -0.2], [0.5, 0.1], 1.0)
    s = ShapeState(rho=[1.0, 1.0], kappa=[0.3, -0.2], theta=[0.2, -0.3], rho_b=[1.0, 1.0], kappa_b=[0.5, 0.1])
    assert control_shape(s, p, 0) == pytest.approx(0.0, abs=1e-15)


def test_control_is_circling_rate_at_two_agent_equilibrium(two_agent_params):
    spec = two_agent_row(two_agent_params, "Type1-CCW")
    s = spec.shape()
    for i in range(2):
        assert control_shape(s, two_agent_params, i) == pytest.approx(1 / spec.rho_b, abs=1e-10)


def test_extract_residual_is_tiny():
    rng = np.random.default_rng(5)
    for _ in range(200):
        s = extract_shape(random_world(rng, int(rng.integers(2, 8))))
        angle, vec = closure_residual(s)
        assert abs(angle) < 1e-12 and np.abs(vec).max() < 1e-12


def test_angle_residual_is_linear_in_kappa():
    rng = np.random.default_rng(6)
    s = extract_shape(random_world(rng, 4))
    s.kappa[2] += 0.1
    assert closure_residual(s)[0] == pytest.approx(0.1, abs=1e-12)


def test_two_agent_constraint_form():
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = extract_shape(random_world(rng, 2))
        assert s.rho[0] == pytest.approx(s.rho[1])
        assert np.allclose(s.theta, s.kappa)
        xi = np.array([s.kappa[0], s.kappa[1], s.rho[0], s.kappa_b[0], s.kappa_b[1], s.rho_b[0], s.rho_b[1]])
        assert np.abs(two_agent_constraints(xi)).max() < 1e-12


def test_roundtrip_and_s1_symmetry():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        s = extract_shape(random_world(rng, n))
        beacon = rng.uniform(-3, 3, 2)
        back = extract_shape(reconstruct_world(s, beacon, rng.uniform(-PI, PI)))
        worst = max(worst, shape_gap(back, s))
    assert worst < 1e-9

    s = extract_shape(random_world(rng, 3))
    a = reconstruct_world(s, (1.0, 2.0), 0.2)
    b = reconstruct_world(s, (1.0, 2.0), 0.2 + 0.7)
    # one extra unit of psi1 rotates the beacon-frame bearing clockwise
    R = rot(-0.7)
    assert np.allclose((a.positions - a.beacon) @ R.T, b.positions - b.beacon, atol=1e-12)


def test_reconstruct_rejects_inconsistent():
    rng = np.random.default_rng(9)
    s = extract_shape(random_world(rng, 3))
    s.rho[0] += 1e-3
    with pytest.raises(InconsistentShape):
        reconstruct_world(s)


def test_pentagon(five_agent_params):
    spec = [s for s in enumerate_equilibria(five_agent_params) if s.direction < 0 and s.m == -1][0]
    w = reconstruct_world(spec.shape(), (0.5, -0.5), 0.3)
    r = np.linalg.norm(w.positions - w.beacon, axis=1)
    assert np.allclose(r, spec.rho_b, atol=1e-12)
    side = np.linalg.norm(w.positions - np.roll(w.positions, -1, axis=0), axis=1)
    assert np.allclose(side, 2 * spec.rho_b * math.sin(PI / 5), atol=1e-12)


def test_shape_ode_needs_symmetry():
    p = ControlParams(0.5, [1.0, 2.0], 1.0, [0.1, 0.2], 0.3, 1.0)
    s = extract_shape(random_world(np.random.default_rng(0), 2))
    with pytest.raises(AssumptionViolation):
        shape_derivative(s, p)


def test_beacon_distance_frozen_when_abeam(two_agent_params):
    s = extract_shape(random_world(np.random.default_rng(1), 2))
    s.kappa_b[:] = [PI / 2, -PI / 2]
    assert np.allclose(shape_derivative(s, two_agent_params).rho_b, 0.0, atol=1e-15)


def test_shape_ode_matches_extracted_full_state_derivative():
    # central difference of extract_shape along the Cartesian flow equals the shape ODE
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(30):
        n = int(rng.integers(2, 6))
        p = random_params(rng, n)
        w = random_world(rng, n, min_sep=0.2)
        dy = full_state_derivative(w, p)
        z = [extract_shape(w.with_vector(w.to_vector() + sgn * h * dy, 0.0)) for sgn in (1, -1)]
        fd = (z[0].to_vector() - z[1].to_vector()) / (2 * h)
        ang = np.r_[n:3 * n, 4 * n:5 * n]
        fd[ang] = np.angle(np.exp(1j * 2 * h * fd[ang])) / (2 * h)
        exact = shape_derivative(extract_shape(w), p).to_vector()
        assert np.allclose(fd, exact, atol=1e-5)


def test_two_agent_reduction_matches_general(two_agent_params):
    rng = np.random.default_rng(12)
    for _ in range(30):
        s = extract_shape(random_world(rng, 2, min_sep=0.2))
        d = shape_derivative(s, two_agent_params)
        xi = np.array([s.kappa[0], s.kappa[1], s.rho[0], s.kappa_b[0], s.kappa_b[1], s.rho_b[0], s.rho_b[1]])
        r = two_agent_reduced_derivative(xi, two_agent_params)
        assert np.allclose(r, [d.kappa[0], d.kappa[1], d.rho[0], d.kappa_b[0], d.kappa_b[1], d.rho_b[0],
                               d.rho_b[1]], atol=1e-12)
        assert np.allclose(d.theta, d.kappa, atol=1e-12)


def test_constraints_preserved_by_shape_flow(five_agent_params):
    rng = np.random.default_rng(13)
    worst = 0.0
    for n, p in ((2, ControlParams.symmetric(0.5, 0.75, (5 * PI / 12, -PI / 12), PI / 3)), (5, five_agent_params)):
        z = extract_shape(random_world(rng, n, box=1.5, min_sep=0.3)).to_vector()
        f = shape_vector_field(p)
        for _ in range(10_000):
            z = rk4_step(f, z, 1e-3)
        worst = max(worst, max_residual(ShapeState.from_vector(z)))
    assert worst < 1e-6


def test_full_and_shape_integrators_agree(two_agent_params):
    rng = np.random.default_rng(14)
    w = random_world(rng, 2, box=1.5, min_sep=0.3)
    full = integrate(w, two_agent_params, SimConfig(t_end=10.0, dt=1e-3, record_every=1000))
    shp = integrate(w, two_agent_params, SimConfig(t_end=10.0, dt=1e-3, record_every=1000, representation="Shape"))
    for a, b in zip(full.states, shp.states):
        assert shape_gap(extract_shape(a), b) < 1e-6


def test_spacing_from_shape_matches_world():
    rng = np.random.default_rng(15)
    for _ in range(50):
        w = random_world(rng, 4)
        a, b = spacing_from_shape(extract_shape(w)), beacon_spacing(w)
        assert np.abs(np.angle(np.exp(1j * (a - b)))).max() < 1e-12
