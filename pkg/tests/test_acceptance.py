"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from beacon_pursuit import (ControlParams, ShapeState, closure_residual, control_all, control_shape,
                            enumerate_equilibria, extract_shape, reconstruct_world, two_agent_row)
from beacon_pursuit.cli import initial_world, select_equilibrium
from beacon_pursuit.config import load_scenario
from beacon_pursuit.equilibria import TABLE_TAGS, equilibrium_residual, two_agent_exists
from beacon_pursuit.shape import max_residual, shape_vector_field
from beacon_pursuit.simkit import convergence_metrics, integrate, rk4_step
from beacon_pursuit.stability import (_effective_angles, classify_eigenvalues, match_roots, numeric_eigenvalues,
                                      poly_roots_two_agent, routh_classify, split_structural,
                                      two_agent_coefficients)

from conftest import random_params, random_world, shape_gap

ROOT = Path(__file__).parent.parent
PI = math.pi
VIB = dict(lam=0.5, mu=0.75, alpha=(5 * PI / 12, -PI / 12), alpha0=PI / 3)
VIC = dict(lam=0.5, mu=1.5, alpha=-PI / 4, alpha0=-PI / 6, n=5)
DRAWS_PER_TYPE = 100


def report(capsys, num: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


def _median_runtime(fn, repeat: int = 50) -> float:
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def test_c1_two_agent_radius(capsys):
    p = ControlParams.symmetric(**VIB)
    specs = enumerate_equilibria(p)
    hits = [s for s in specs if s.direction > 0 and s.sigma == (1, 1) and abs(s.rho_b - 0.9761) < 1e-4]
    rt = _median_runtime(lambda: enumerate_equilibria(p))
    ok = len(hits) == 1 and rt < 1e-3
    got = hits[0].rho_b if hits else float("nan")
    report(capsys, 1, ok, f"Type-1 CCW rho_b = {got:.6f} (target 0.9761 +- 1e-4), runtime {rt * 1e3:.3f} ms < 1 ms")


def test_c2_five_agent_radius(capsys):
    p = ControlParams.symmetric(**VIC)
    specs = enumerate_equilibria(p)
    hits = [s for s in specs if s.direction < 0 and abs(s.rho_b - 0.9395) < 1e-4
            and np.allclose(np.mod(s.spacing, 2 * PI), 2 * PI - 2 * PI / 5, atol=1e-9)]
    rt = _median_runtime(lambda: enumerate_equilibria(p))
    ok = len(hits) == 1 and rt < 1e-2
    got = hits[0].rho_b if hits else float("nan")
    report(capsys, 2, ok, f"CW rho_b = {got:.6f} (target 0.9395 +- 1e-4), uniform spacing 2pi/5 (clockwise), "
                          f"runtime {rt * 1e3:.3f} ms < 10 ms")


def test_c3_two_agent_spacing(capsys):
    p = ControlParams.symmetric(**VIB)
    (spec,) = [s for s in enumerate_equilibria(p) if s.direction > 0 and abs(s.rho_b - 0.9761) < 1e-4]
    got = sorted(np.mod(spec.spacing, 2 * PI))
    err = max(abs(got[0] - PI / 2), abs(got[1] - 3 * PI / 2))
    report(capsys, 3, err < 1e-9, f"spacings {{{got[0]:.12f}, {got[1]:.12f}}} vs {{pi/2, 3pi/2}}, max error {err:.1e}")


def test_c4_simulated_convergence(capsys):
    scn = load_scenario(ROOT / "scenarios" / "two_agent_circling.json")
    params = scn.params.control()
    spec, _ = select_equilibrium(params, scn.initial.select, "")
    world = initial_world(scn)
    t0 = time.perf_counter()
    traj = integrate(world, params, scn.sim)
    rt = time.perf_counter() - t0
    m = convergence_metrics(traj, spec)
    sel = traj.times >= 150.0
    min_sep = np.minimum(traj.spacing[sel], 2 * PI - traj.spacing[sel]).min(axis=1)
    sep_ok = bool(np.all(np.abs(min_sep - PI / 2) < 0.01))
    ok = m.settled and m.settling_time <= 150.0 and sep_ok and scn.sim.integrator == "RK4" and \
        scn.sim.dt == 1e-3 and rt < 30.0
    st = "never" if m.settling_time is None else f"{m.settling_time:.1f} s"
    report(capsys, 4, ok, f"RK4 dt=1e-3 from 10% perturbation: settled within 1% at t = {st} (<= 150 s), "
                          f"angular separation pi/2 +- 0.01 after 150 s: {sep_ok}, runtime {rt:.2f} s < 30 s")


def test_c5_event_recovery(capsys):
    scn = load_scenario(ROOT / "scenarios" / "five_agent_events.json")
    params = scn.params.control()
    spec, _ = select_equilibrium(params, scn.initial.select, "")
    traj = integrate(initial_world(scn), params, scn.sim)
    cuts = [0.0] + [e.time for e in scn.sim.events] + [scn.sim.t_end]
    kinds = [type(e).__name__ for e in scn.sim.events]
    windows = []
    for k, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        windows.append(convergence_metrics(traj, spec, a, None if k == len(cuts) - 2 else b))
    ok = traj.ok and kinds == ["HeadingKick", "BeaconMove"] and all(w.settled for w in windows[1:]) \
        and windows[0].settled
    desc = ", ".join(f"after {kind} at {t:g} s: "
                     + ("not settled" if w.settling_time is None else f"settled at {w.settling_time:.1f} s")
                     for kind, t, w in zip(kinds, cuts[1:-1], windows[1:]))
    report(capsys, 5, ok, f"five-agent run, initial settling {windows[0].settling_time} s; {desc}")


def _draws(tag, rng, count):
    out = []
    while len(out) < count:
        lam = rng.uniform(0.05, 0.95)
        a_plus, a_minus = rng.uniform(-PI, PI, 2)
        p = ControlParams.symmetric(lam, rng.uniform(0.2, 3.0), (a_plus + a_minus, a_plus - a_minus),
                                    rng.uniform(-PI, PI))
        if two_agent_exists(p, tag):
            out.append(p)
    return out


@pytest.fixture(scope="module")
def oracle_runs():
    rng = np.random.default_rng(20240611)
    t0 = time.perf_counter()
    runs = []
    for tag in TABLE_TAGS:
        for p in _draws(tag, rng, DRAWS_PER_TYPE):
            spec = two_agent_row(p, tag)
            eigs = numeric_eigenvalues(spec, p)
            roots = poly_roots_two_agent(p, tag)
            c = two_agent_coefficients(p, tag)
            runs.append((tag, p, eigs, roots, c))
    return runs, time.perf_counter() - t0


def test_c6_polynomial_vs_jacobian(capsys, oracle_runs):
    runs, elapsed = oracle_runs
    worst_all = worst_struct = 0.0
    counts = {tag: 0 for tag in TABLE_TAGS}
    for tag, p, eigs, roots, c in runs:
        counts[tag] += 1
        worst_all = max(worst_all, match_roots(roots, eigs))
        mask = split_structural(eigs, 2, c.delta)
        pair = np.sort_complex(eigs[mask])
        worst_struct = max(worst_struct, float(np.abs(pair - np.array([-1j, 1j]) * abs(c.delta)).max()))
    ok = min(counts.values()) >= 100 and worst_all < 1e-5 and worst_struct < 1e-6 and elapsed < 60
    report(capsys, 6, ok, f"{len(runs)} draws ({min(counts.values())} per type): max root/eigenvalue gap "
                          f"{worst_all:.2e} < 1e-5, structural +-j delta gap {worst_struct:.2e} < 1e-6, "
                          f"{elapsed:.2f} s < 60 s")


def test_c7_sign_table(capsys, oracle_runs):
    runs, _ = oracle_runs
    used = excluded = agree = 0
    for tag, p, eigs, roots, c in runs:
        a0, ap = _effective_angles(p, tag)
        if min(abs(math.sin(a0)), abs(math.sin(ap))) < 1e-3:
            excluded += 1
            continue
        used += 1
        _, cond = routh_classify(p, tag)
        predicted = "Stable" if cond["sign_rule_stable"] else "Unstable"
        numeric = classify_eigenvalues(eigs, split_structural(eigs, 2, c.delta), eps=1e-7)
        agree += predicted == numeric
    ok = used > 0 and agree == used
    report(capsys, 7, ok, f"sign rule matches numeric eigenvalue signs in {agree}/{used} draws "
                          f"({excluded} within 1e-3 of a boundary excluded)")


def test_c8_property_suite(capsys):
    rng = np.random.default_rng(8)
    # constraint drift under the shape flow, 1e4 RK4 steps with h = 1e-3; runs that pass
    # within 0.05 m (50 step lengths) of a collision are under-resolved and reported apart
    drift, close_calls, close_drift, runs = 0.0, 0, 0.0, 0
    while runs < 8:
        n = int(rng.integers(2, 7))
        p = random_params(rng, n)
        z = extract_shape(random_world(rng, n, box=1.5, min_sep=0.3)).to_vector()
        f = shape_vector_field(p)
        closest = np.inf
        for _ in range(10_000):
            z = rk4_step(f, z, 1e-3)
            closest = min(closest, z[:n].min(), z[3 * n:4 * n].min())
        res = max_residual(ShapeState.from_vector(z))
        if closest < 0.05:
            close_calls += 1
            close_drift = max(close_drift, res)
        else:
            runs += 1
            drift = max(drift, res)
    # Cartesian and shape control forms on 1e4 random states
    gap = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 7))
        w = random_world(rng, n)
        p = random_params(rng, n, symmetric=False)
        u = control_all(w, p)
        s = extract_shape(w)
        gap = max(gap, max(abs(u[i] - control_shape(s, p, i)) for i in range(n)))
    # extract o reconstruct round trip
    trip = 0.0
    for _ in range(1000):
        s = extract_shape(random_world(rng, int(rng.integers(2, 7))))
        trip = max(trip, shape_gap(extract_shape(reconstruct_world(s, rng.uniform(-2, 2, 2),
                                                                   rng.uniform(-PI, PI))), s))
    # equilibrium residual for every enumerated spec over 1e3 draws
    resid, nspec = 0.0, 0
    for _ in range(1000):
        p = random_params(rng, int(rng.integers(2, 7)))
        for spec in enumerate_equilibria(p):
            resid = max(resid, equilibrium_residual(spec, p))
            nspec += 1
    ok = drift < 1e-6 and gap < 1e-10 and trip < 1e-9 and resid < 1e-10
    report(capsys, 8, ok, f"constraint drift {drift:.1e} < 1e-6 over {runs} runs ({close_calls} near-collision "
                          f"runs set apart, drift {close_drift:.1e}), control gap {gap:.1e} < 1e-10, "
                          f"round trip {trip:.1e} < 1e-9, equilibrium residual {resid:.1e} < 1e-10 "
                          f"over {nspec} specs")


def test_c9_documented_exclusion(capsys):
    text = (ROOT / "README.md").read_text()
    ok = "Not reproduced" in text and "physical" in text
    report(capsys, 9, ok, "physical-robot error margins are out of scope; exclusion documented in README.md "
                          "(covered instead by criteria 4, 5 and 8)")
