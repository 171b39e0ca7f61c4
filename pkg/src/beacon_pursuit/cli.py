"""Command-line front end.

    bpl equilibria --config scenario.json --out runs/a
    bpl simulate   --config scenario.json --out runs/a --emit-plot-data
    bpl stability  --config scenario.json --out runs/a
    bpl sweep      --config sweep.json    --out runs/b

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import Explicit, FromEquilibrium, RandomInit, Scenario, Selector, load_scenario
from .equilibria import (EquilibriumSpec, continuum_branches, enumerate_equilibria, tag_of, two_agent_exists,
                         two_agent_row)
from .errors import BeaconPursuitError, ConfigError, IllConditioned, NoSuchEquilibrium
from .frenet import ControlParams, WorldState
from .simkit import (convergence_metrics, integrate, perturb_world, world_from_equilibrium,
                     write_plot_data, write_trajectory_csv)
from .stability import analyze, two_agent_table_spec

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericFailure(BeaconPursuitError):
    pass


def _analysis_params(scn: Scenario) -> ControlParams:
    params = scn.params.control()
    if not params.is_symmetric(tol=1e-12):
        raise ConfigError("equilibrium analysis needs equal gains, unit speeds and a common beacon offset",
                          "/params")
    if not 0 < params.lam < 1 or params.mu0 <= 0:
        raise ConfigError("equilibrium analysis needs 0 < lambda < 1 and mu > 0", "/params")
    return params


def select_equilibrium(params: ControlParams, sel: Selector, pointer: str) -> tuple[EquilibriumSpec, str | None]:
    """Pick one equilibrium: a table row by ``type`` or a filtered enumeration entry."""
    if sel.type is not None:
        if params.n != 2:
            raise ConfigError("type tags apply to two agents only", f"{pointer}/type")
        try:
            return two_agent_table_spec(params, sel.type), sel.type
        except NoSuchEquilibrium as exc:
            raise NumericFailure(str(exc)) from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        specs = enumerate_equilibria(params)
    if sel.direction is not None:
        specs = [s for s in specs if s.direction == sel.direction]
    if sel.sigma is not None:
        specs = [s for s in specs if s.sigma == sel.sigma]
    if sel.m is not None:
        specs = [s for s in specs if s.m == sel.m]
    if not 0 <= sel.index < len(specs):
        raise NumericFailure(f"no equilibrium matches the selection ({len(specs)} candidates)")
    spec = specs[sel.index]
    return spec, tag_of(spec, params)


def _target(scn: Scenario) -> Selector | None:
    if scn.target is not None:
        return scn.target
    if isinstance(scn.initial, FromEquilibrium):
        return scn.initial.select
    return None


def initial_world(scn: Scenario, seed: int | None = None) -> WorldState:
    init = scn.initial
    if init is None:
        raise ConfigError("missing field", "/initial")
    beacon = np.array(scn.beacon)
    params = scn.params.control()
    if isinstance(init, Explicit):
        a = np.array(init.agents)
        return WorldState(a[:, :2].copy(), a[:, 2].copy(), beacon, params.speeds)
    if isinstance(init, RandomInit):
        rng = np.random.default_rng(init.seed if seed is None else seed)
        for _ in range(1000):
            pos = beacon + rng.uniform(-init.box, init.box, size=(scn.n, 2))
            diff = pos - np.roll(pos, -1, axis=0)
            if min(np.linalg.norm(diff, axis=1).min(), np.linalg.norm(pos - beacon, axis=1).min()) > 0.1 * init.box:
                break
        else:
            raise NumericFailure("could not draw a well-separated random start")
        return WorldState(pos, rng.uniform(-math.pi, math.pi, scn.n), beacon, params.speeds)
    spec, _ = select_equilibrium(_analysis_params(scn), init.select, "/initial/select")
    world = world_from_equilibrium(spec, beacon, init.psi1)
    if init.perturbation > 0:
        rng = np.random.default_rng(init.seed if seed is None else seed)
        world = perturb_world(world, init.perturbation, rng)
    return world


class _Writer:
    def __init__(self, out: Path, force: bool):
        self.out, self.force = out, force

    def path(self, name: str) -> Path:
        p = self.out / name
        if p.exists() and not self.force:
            raise ConfigError(f"{p} exists; pass --force to overwrite", "")
        self.out.mkdir(parents=True, exist_ok=True)
        return p

    def json(self, name: str, data) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n")
        return p


def cmd_equilibria(scn: Scenario, w: _Writer, args) -> dict:
    params = _analysis_params(scn)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        specs = enumerate_equilibria(params)
    rows = []
    for s in specs:
        d = s.to_dict()
        d["type"] = tag_of(s, params) if scn.n == 2 else None
        rows.append(d)
    branches = continuum_branches(params)
    degenerate = bool(branches) or (scn.n == 2 and abs(math.sin(float(np.sum(params.alpha)))) < 1e-12)
    report = {
        "n": scn.n,
        "equilibria": rows,
        "continuum": [list(b) for b in branches],
        "degenerate_family": degenerate,
    }
    if scn.n == 2 and not degenerate:
        report["table"] = {tag: two_agent_exists(params, tag) for tag in ("Type1-CCW", "Type1-CW", "Type2-CCW",
                                                                             "Type2-CW")}
    w.json("equilibria.json", report)
    for d in rows:
        print(f"{d['direction_name']:>3}  sigma={d['sigma']}  m={d['m']:+d}  rho_b={d['rho_b']:.4f}"
              + (f"  {d['type']}" if d["type"] else ""))
    if degenerate:
        print("degenerate family: continuum of equilibria on balanced branches")
    return report


def _segment_bounds(scn: Scenario) -> list[tuple[float, float]]:
    cuts = [0.0] + [e.time for e in scn.sim.events] + [scn.sim.t_end]
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def cmd_simulate(scn: Scenario, w: _Writer, args) -> dict:
    if scn.sim is None:
        raise ConfigError("missing field", "/sim")
    world = initial_world(scn, args.seed)
    traj = integrate(world, scn.params.control(), scn.sim)
    with w.path("trajectory.csv").open("w", newline="") as fh:
        write_trajectory_csv(traj, fh)
    if args.emit_plot_data:
        with w.path("plot_data.csv").open("w", newline="") as fh:
            write_plot_data(traj, fh)
    metrics: dict = {
        "n": scn.n, "t_end": float(traj.times[-1]), "samples": len(traj.times),
        "events": traj.events, "error": traj.error, "aborted_at": traj.aborted_at,
    }
    sel = _target(scn)
    if sel is not None:
        spec, tag = select_equilibrium(_analysis_params(scn), sel, "/target")
        metrics["target"] = {"type": tag, "rho_b": spec.rho_b, "spacing": list(spec.spacing),
                             "direction": spec.direction_name}
        metrics["overall"] = convergence_metrics(traj, spec).to_dict()
        segs = []
        for a, b in _segment_bounds(scn):
            if traj.aborted_at is not None and a >= traj.aborted_at:
                break
            last = b >= scn.sim.t_end
            m = convergence_metrics(traj, spec, a, None if last else b)
            segs.append({"t_from": a, "t_to": b, **m.to_dict()})
        metrics["segments"] = segs
        metrics["resettled_after_events"] = sum(1 for s in segs[1:] if s["settled"])
    w.json("metrics.json", metrics)
    print(f"simulated {metrics['t_end']:g} s, {len(traj.events)} events"
          + (f", aborted at {traj.aborted_at:g} s ({traj.error})" if traj.error else ""))
    for s in metrics.get("segments", []):
        st = "not settled" if s["settling_time"] is None else f"settled at {s['settling_time']:.2f} s"
        print(f"  [{s['t_from']:g}, {s['t_to']:g}): {st}, radius error {s['final_radius_error']:.3g}")
    return metrics


def cmd_stability(scn: Scenario, w: _Writer, args) -> dict:
    params = _analysis_params(scn)
    sel = _target(scn) or Selector()
    spec, tag = select_equilibrium(params, sel, "/target")
    report = analyze(spec, params, tag).to_dict()
    w.json("stability.json", report)
    line = f"{report['classification']}  rho_b={spec.rho_b:.4f}"
    if report["max_root_discrepancy"] is not None:
        line += f"  {tag}  root discrepancy {report['max_root_discrepancy']:.2e}"
    print(line)
    return report


SWEEP_HEADER = ["lambda", "mu", "alpha0", "alpha_plus", "alpha_minus", "type", "exists", "rho_b", "rho",
                "spacing_1", "spacing_2", "classification"]


def _sweep_point(point: dict, tag: str) -> list:
    lam, mu, a0, ap, am = (point[k] for k in ("lambda", "mu", "alpha0", "alpha_plus", "alpha_minus"))
    head = [repr(float(v)) for v in (lam, mu, a0, ap, am)] + [tag]
    try:
        params = ControlParams.symmetric(lam, mu, (ap + am, ap - am), a0)
        if not two_agent_exists(params, tag):
            return head + ["none"] * 6
        spec = two_agent_row(params, tag)
        cls = analyze(spec, params, tag).classification
    except (NoSuchEquilibrium, IllConditioned, ValueError) as exc:
        return head + ["none", "", "", "", "", f"error: {exc}"]
    return head + ["yes", repr(spec.rho_b), repr(spec.rho[0]), repr(spec.spacing[0] % (2 * math.pi)),
                   repr(spec.spacing[1] % (2 * math.pi)), cls]


def _threads() -> int:
    raw = os.environ.get("BPL_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"BPL_THREADS must be an integer, got {raw!r}", "") from None
    if val < 1:
        raise ConfigError("BPL_THREADS must be >= 1", "")
    return val


def sweep_points(scn: Scenario) -> list[dict]:
    if scn.n != 2:
        raise ConfigError("sweeps run over the two-agent table", "/n")
    p = scn.params
    base = {"lambda": p.lam, "mu": p.mu, "alpha0": p.alpha0,
            "alpha_plus": (p.alpha[0] + p.alpha[1]) / 2, "alpha_minus": (p.alpha[0] - p.alpha[1]) / 2}
    points = [base]
    for name, values in scn.sweep.axes:
        points = [{**pt, name: v} for pt in points for v in values]
    return points


def cmd_sweep(scn: Scenario, w: _Writer, args) -> list:
    if scn.sweep is None:
        raise ConfigError("missing field", "/sweep")
    points = sweep_points(scn)
    tag = scn.sweep.type
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda pt: _sweep_point(pt, tag), points))
    with w.path("sweep.csv").open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(SWEEP_HEADER)
        out.writerows(rows)
    print(f"{len(rows)} grid points, {sum(r[6] == 'yes' for r in rows)} with a {tag} equilibrium")
    return rows


HELP = {
    "equilibria": "enumerate circling equilibria -> equilibria.json",
    "simulate": "integrate a scenario -> trajectory.csv, metrics.json",
    "stability": "linear stability of the target equilibrium -> stability.json",
    "sweep": "two-agent parameter grid -> sweep.csv",
}
COMMANDS = {"equilibria": cmd_equilibria, "simulate": cmd_simulate, "stability": cmd_stability, "sweep": cmd_sweep}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="scenario JSON file")
    p.add_argument("--out", default=d, help="output directory (default: the scenario's 'outputs' or '.')")
    p.add_argument("--force", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="overwrite existing output files")
    p.add_argument("--emit-plot-data", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="also write plot_data.csv (simulate)")
    p.add_argument("--seed", type=int, default=d, help="override the scenario's random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpl", description="Beacon-referenced cyclic pursuit toolkit.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        _add_globals(sp, suppress=True)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is None:
            raise ConfigError("--config is required", "")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative", "")
        scn = load_scenario(args.config)
        out = Path(args.out or scn.outputs or ".")
        COMMANDS[args.command](scn, _Writer(out, args.force), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BeaconPursuitError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))
