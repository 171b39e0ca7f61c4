"""Fixed-step time integration with scheduled events and trajectory export."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .equilibria import EquilibriumSpec
from .errors import DegenerateGeometry
from .frenet import ControlParams, WorldState, _advance_world, _kernel_args, beacon_spacing, extract_shape, wrap
from .shape import ShapeState, reconstruct_world, shape_vector_field, spacing_from_shape

INTEGRATORS = ("RK4", "Euler")
REPRESENTATIONS = ("FullState", "Shape")


@dataclass(frozen=True)
class HeadingKick:
    time: float
    agent: int
    delta: float

    def describe(self) -> str:
        return f"heading kick: agent {self.agent} by {self.delta:+.6g} rad"


@dataclass(frozen=True)
class BeaconMove:
    time: float
    position: tuple[float, float]

    def describe(self) -> str:
        return f"beacon moved to ({self.position[0]:.6g}, {self.position[1]:.6g})"


Event = Union[HeadingKick, BeaconMove]


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float = 1e-3
    integrator: str = "RK4"
    representation: str = "FullState"
    events: tuple = ()
    record_every: int = 100

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")
        times = [e.time for e in self.events]
        if times != sorted(times):
            raise ValueError("events must be sorted by time")
        for e in self.events:
            if not 0 <= e.time < self.t_end:
                raise ValueError(f"event at t = {e.time} outside [0, t_end)")
            if isinstance(e, HeadingKick) and self.representation != "FullState":
                raise ValueError("heading kicks need the FullState representation")
        object.__setattr__(self, "events", tuple(self.events))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    rho_b: np.ndarray
    spacing: np.ndarray
    kappa_b: np.ndarray
    events: list = field(default_factory=list)
    error: str | None = None
    aborted_at: float | None = None

    @property
    def n(self) -> int:
        return self.rho_b.shape[1]

    @property
    def ok(self) -> bool:
        return self.error is None


def apply_event(world: WorldState, event: Event) -> WorldState:
    if isinstance(event, HeadingKick):
        headings = world.headings.copy()
        headings[event.agent] += event.delta
        return world.copy(headings=headings)
    return world.copy(beacon=np.asarray(event.position, dtype=float))


def world_from_equilibrium(spec: EquilibriumSpec, beacon=(0.0, 0.0), psi1: float = 0.0) -> WorldState:
    return reconstruct_world(spec.shape(), beacon, psi1)


def perturb_world(world: WorldState, fraction: float, rng: np.random.Generator) -> WorldState:
    """Randomly perturb each agent by up to ``fraction`` of its equilibrium scales.

    Beacon distance scales by ``1 + fraction * u``, the bearing about the beacon
    shifts by ``fraction * u * pi / n`` and the heading by ``fraction * u * pi / 2``,
    with independent ``u ~ U(-1, 1)``.
    """
    n = world.n
    u = rng.uniform(-1.0, 1.0, size=(3, n))
    rel = world.positions - world.beacon
    ang = np.arctan2(rel[:, 1], rel[:, 0]) + fraction * u[1] * math.pi / n
    dist = np.linalg.norm(rel, axis=1) * (1 + fraction * u[0])
    pos = world.beacon + np.column_stack([dist * np.cos(ang), dist * np.sin(ang)])
    return world.copy(positions=pos, headings=world.headings + fraction * u[2] * math.pi / 2)


def rk4_step(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def euler_step(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    return y + dt * f(y)


class _Recorder:
    def __init__(self):
        self.times: list[float] = []
        self.states: list = []

    def add(self, t: float, state) -> None:
        if self.times and t <= self.times[-1] + 1e-9:
            # a post-event snapshot replaces the pre-event one at the same instant
            self.times.pop()
            self.states.pop()
        self.times.append(t)
        self.states.append(state)


def _series(states: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho_b, spacing, kappa_b = [], [], []
    for s in states:
        shape = extract_shape(s) if isinstance(s, WorldState) else s
        rho_b.append(shape.rho_b)
        spacing.append(spacing_from_shape(shape))
        kappa_b.append(wrap(shape.kappa_b))
    return np.array(rho_b), np.array(spacing), np.array(kappa_b)


def _segments(t0: float, config: SimConfig):
    """Yield ``(t_start, t_stop, event_or_None)``; the event fires at ``t_stop``."""
    t = t0
    for e in config.events:
        yield t, e.time, e
        t = e.time
    yield t, config.t_end, None


def integrate(initial: WorldState | ShapeState, params: ControlParams, config: SimConfig) -> Trajectory:
    """Integrate the closed loop from ``initial`` up to ``config.t_end``.

    Steps are shortened so that every event lands exactly on a step boundary.
    Degenerate geometry stops the run; the partial trajectory is returned
    with ``error`` and ``aborted_at`` set.
    """
    full = config.representation == "FullState"
    if full and not isinstance(initial, WorldState):
        raise TypeError("FullState integration needs a WorldState")
    if not full and isinstance(initial, WorldState):
        initial = extract_shape(initial)
    if not full and config.events:
        raise ValueError("Shape representation runs take no events")
    rk4 = config.integrator == "RK4"
    every = int(config.record_every)

    if full:
        world = initial.copy(speeds=params.speeds)
        y = world.to_vector()
        t = world.time

        def advance(y, h, k):
            return _advance_world(y, *_kernel_args(world, params), h, k, rk4)

        def snapshot(y, t):
            return world.with_vector(y, t)
    else:
        f = shape_vector_field(params)
        step = rk4_step if rk4 else euler_step
        y = initial.to_vector()
        t = 0.0

        def advance(y, h, k):
            for done in range(k):
                try:
                    y[:] = step(f, y, h)
                except DegenerateGeometry:
                    return done
            return k

        def snapshot(y, t):
            return ShapeState.from_vector(y).wrapped()

    rec = _Recorder()
    rec.add(t, snapshot(y, t))
    log: list[dict] = []
    count = 0
    error = aborted = None
    for t_start, t_stop, event in _segments(t, config):
        span = t_stop - t_start
        n_full = int(math.floor(span / config.dt + 1e-9))
        tail = span - n_full * config.dt
        k_seg = 0
        while k_seg < n_full:
            todo = min(every - count % every, n_full - k_seg)
            done = advance(y, config.dt, todo)
            count += done
            k_seg += done
            t_now = t_start + k_seg * config.dt
            if done < todo:
                error, aborted = "DegenerateGeometry", t_now
                break
            if count % every == 0:
                rec.add(t_now, snapshot(y, t_now))
        if error is None and tail > 1e-12:
            if advance(y, tail, 1) < 1:
                error, aborted = "DegenerateGeometry", t_start + k_seg * config.dt
            else:
                count += 1
        if error is not None:
            rec.add(aborted, snapshot(y, aborted))
            break
        t = t_stop
        if event is None:
            rec.add(t, snapshot(y, t))
        else:
            world = apply_event(world.with_vector(y, t), event)
            y = world.to_vector()
            log.append({"time": event.time, "kind": type(event).__name__, "detail": event.describe()})
            rec.add(t, snapshot(y, t))

    rho_b, spacing, kappa_b = _series(rec.states)
    return Trajectory(np.array(rec.times), rec.states, rho_b, spacing, kappa_b, log, error, aborted)


@dataclass
class ConvergenceMetrics:
    settling_time: float | None
    final_radius_error: float
    final_spacing_error: float

    @property
    def settled(self) -> bool:
        return self.settling_time is not None

    def to_dict(self) -> dict:
        return {"settled": self.settled, "settling_time": self.settling_time,
                "final_radius_error": self.final_radius_error, "final_spacing_error": self.final_spacing_error}


def spacing_error(spacing: Sequence[float], target: Sequence[float]) -> float:
    """Circular max error between two spacing lists, minimised over cyclic shifts."""
    spacing = np.asarray(spacing, dtype=float)
    target = np.asarray(target, dtype=float)
    best = math.inf
    for k in range(len(target)):
        best = min(best, float(np.abs(wrap(np.roll(spacing, -k) - target)).max()))
    return best


def convergence_metrics(traj: Trajectory, spec: EquilibriumSpec, t_from: float | None = None,
                        t_to: float | None = None, band: float = 0.01) -> ConvergenceMetrics:
    """Settling time (``None`` if never settled) and final errors against ``spec``.

    A sample is inside the band when every beacon distance is within
    ``band * rho_b`` of the target and every agent circles the beacon in the
    spec's direction (``sin kappa_b`` of the right sign); a formation with the
    right radius going the wrong way round is not near the spec.

    The half-open window ``[t_from, t_to)`` restricts the analysis, e.g. to
    the interval between two events (the snapshot at an event time is the
    post-event state); "final" means the last sample in the window.
    """
    if traj.n != spec.n:
        raise ValueError("trajectory and spec have different agent counts")
    sel = np.ones(len(traj.times), dtype=bool)
    if t_from is not None:
        sel &= traj.times >= t_from
    if t_to is not None:
        sel &= traj.times < t_to
    times = traj.times[sel]
    rho_b = traj.rho_b[sel]
    spacing = traj.spacing[sel]
    if len(times) == 0:
        raise ValueError("empty window")
    err = np.abs(rho_b - spec.rho_b).max(axis=1)
    inside = (err < band * spec.rho_b) & np.all(spec.direction * np.sin(traj.kappa_b[sel]) > 0, axis=1)
    if inside[-1]:
        outside = np.flatnonzero(~inside)
        settling = float(times[outside[-1] + 1]) if len(outside) else float(times[0])
    else:
        settling = None
    return ConvergenceMetrics(settling, float(err[-1]), spacing_error(spacing[-1], spec.spacing))


CSV_HEADER = ["t", "agent", "x", "y", "heading", "rho_b", "kappa", "kappa_b", "rho_next"]


def _fmt(v) -> str:
    return repr(float(v))


def trajectory_rows(traj: Trajectory):
    for t, state in zip(traj.times, traj.states):
        if isinstance(state, WorldState):
            shape = extract_shape(state)
            for i in range(state.n):
                yield [_fmt(t), str(i), _fmt(state.positions[i, 0]), _fmt(state.positions[i, 1]),
                       _fmt(state.headings[i]), _fmt(shape.rho_b[i]), _fmt(shape.kappa[i]),
                       _fmt(shape.kappa_b[i]), _fmt(shape.rho[i])]
            yield [_fmt(t), "b", _fmt(state.beacon[0]), _fmt(state.beacon[1]), "", "", "", "", ""]
        else:
            for i in range(state.n):
                yield [_fmt(t), str(i), "", "", "", _fmt(state.rho_b[i]), _fmt(state.kappa[i]),
                       _fmt(state.kappa_b[i]), _fmt(state.rho[i])]


def write_trajectory_csv(traj: Trajectory, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(trajectory_rows(traj))


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    return buf.getvalue()


def write_plot_data(traj: Trajectory, fh) -> None:
    """Long-format ``t,series,agent,value`` rows of beacon distance and spacing."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "series", "agent", "value"])
    for k, t in enumerate(traj.times):
        for name, data in (("rho_b", traj.rho_b), ("spacing", traj.spacing)):
            for i in range(traj.n):
                w.writerow([_fmt(t), name, i, _fmt(data[k, i])])
