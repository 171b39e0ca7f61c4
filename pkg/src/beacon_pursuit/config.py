"""Scenario files: JSON, ``"version": 1``.

Angles may be given in radians or as rational multiples of pi written as
strings (``"pi/3"``, ``"-5pi/12"``, ``"5*pi/12"``, ``"0.5pi"``).
Agent indices are zero-based.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import ConfigError
from .frenet import ControlParams
from .simkit import BeaconMove, HeadingKick, SimConfig

VERSION = 1
_PI_RE = re.compile(r"^\s*([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$")
SWEEP_AXES = ("lambda", "mu", "alpha0", "alpha_plus", "alpha_minus")
ANGLE_AXES = ("alpha0", "alpha_plus", "alpha_minus")


def parse_angle(value: Any, pointer: str = "") -> float:
    if isinstance(value, bool):
        raise ConfigError("expected an angle", pointer)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            sign, coef, den = m.groups()
            frac = Fraction(coef) if coef else Fraction(1)
            if den:
                if int(den) == 0:
                    raise ConfigError("zero denominator", pointer)
                frac /= int(den)
            return (-1 if sign == "-" else 1) * float(frac) * math.pi
    raise ConfigError(f"expected radians or a 'p/q pi' string, got {value!r}", pointer)


def _number(value: Any, pointer: str, positive: bool = False, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", pointer)
    if integer and int(value) != value:
        raise ConfigError("expected an integer", pointer)
    if positive and not value > 0:
        raise ConfigError("must be positive", pointer)
    return int(value) if integer else float(value)


def _get(d: dict, key: str, pointer: str, default: Any = ...) -> Any:
    if not isinstance(d, dict):
        raise ConfigError("expected an object", pointer)
    if key not in d:
        if default is ...:
            raise ConfigError("missing field", f"{pointer}/{key}")
        return default
    return d[key]


def _per_agent(value: Any, n: int, pointer: str, angle: bool) -> tuple[float, ...]:
    conv = parse_angle if angle else (lambda v, p: _number(v, p))
    if isinstance(value, list):
        if len(value) != n:
            raise ConfigError(f"expected {n} entries, got {len(value)}", pointer)
        return tuple(conv(v, f"{pointer}/{i}") for i, v in enumerate(value))
    return (conv(value, pointer),) * n


@dataclass(frozen=True)
class ParamsConfig:
    lam: float
    mu: float
    alpha: tuple[float, ...]
    alpha0: float
    mu_b: tuple[float, ...] | None = None
    alpha_b: tuple[float, ...] | None = None
    speeds: tuple[float, ...] | None = None

    def control(self) -> ControlParams:
        n = len(self.alpha)
        return ControlParams(
            lam=self.lam, mu=self.mu,
            mu_b=self.mu_b if self.mu_b is not None else self.mu,
            alpha=np.array(self.alpha),
            alpha_b=self.alpha_b if self.alpha_b is not None else self.alpha0,
            speeds=self.speeds if self.speeds is not None else np.ones(n),
        )


@dataclass(frozen=True)
class Selector:
    type: str | None = None
    direction: int | None = None
    sigma: tuple[int, ...] | None = None
    m: int | None = None
    index: int = 0


@dataclass(frozen=True)
class FromEquilibrium:
    select: Selector = Selector()
    perturbation: float = 0.0
    psi1: float = 0.0
    seed: int | None = None


@dataclass(frozen=True)
class Explicit:
    agents: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class RandomInit:
    seed: int
    box: float = 2.0


Initial = Union[FromEquilibrium, Explicit, RandomInit]


@dataclass(frozen=True)
class SweepConfig:
    type: str = "Type1-CCW"
    axes: tuple[tuple[str, tuple[float, ...]], ...] = ()


@dataclass(frozen=True)
class Scenario:
    n: int
    params: ParamsConfig
    beacon: tuple[float, float] = (0.0, 0.0)
    initial: Initial | None = None
    sim: SimConfig | None = None
    outputs: str | None = None
    sweep: SweepConfig | None = None
    target: Selector | None = None
    version: int = VERSION


def _parse_params(d: dict, n: int, ptr: str) -> ParamsConfig:
    lam = _number(_get(d, "lambda", ptr), f"{ptr}/lambda")
    if not 0 <= lam <= 1:
        raise ConfigError("lambda must lie in [0, 1]", f"{ptr}/lambda")
    mu = _number(_get(d, "mu", ptr), f"{ptr}/mu")
    if mu < 0:
        raise ConfigError("gain must be non-negative", f"{ptr}/mu")
    opt = {}
    for key, angle in (("mu_b", False), ("alpha_b", True), ("speeds", False)):
        if key in d:
            opt[key] = _per_agent(d[key], n, f"{ptr}/{key}", angle)
    if "speeds" in opt and min(opt["speeds"]) <= 0:
        raise ConfigError("speeds must be positive", f"{ptr}/speeds")
    return ParamsConfig(
        lam=lam, mu=mu,
        alpha=_per_agent(_get(d, "alpha", ptr), n, f"{ptr}/alpha", True),
        alpha0=parse_angle(_get(d, "alpha0", ptr), f"{ptr}/alpha0"),
        **opt,
    )


def _parse_selector(d: dict, n: int, ptr: str) -> Selector:
    if not isinstance(d, dict):
        raise ConfigError("expected an object", ptr)
    direction = d.get("direction")
    if direction is not None:
        if direction not in ("CCW", "CW"):
            raise ConfigError("direction must be 'CCW' or 'CW'", f"{ptr}/direction")
        direction = 1 if direction == "CCW" else -1
    sigma = d.get("sigma")
    if sigma is not None:
        if not isinstance(sigma, list) or len(sigma) != n or any(s not in (1, -1) for s in sigma):
            raise ConfigError(f"sigma must be a list of {n} signs", f"{ptr}/sigma")
        sigma = tuple(sigma)
    tag = d.get("type")
    if tag is not None and tag not in ("Type1-CCW", "Type1-CW", "Type2-CCW", "Type2-CW"):
        raise ConfigError(f"unknown type {tag!r}", f"{ptr}/type")
    m = d.get("m")
    if m is not None:
        m = _number(m, f"{ptr}/m", integer=True)
    index = _number(d.get("index", 0), f"{ptr}/index", integer=True)
    return Selector(tag, direction, sigma, m, index)


def _parse_initial(d: dict, n: int, ptr: str) -> Initial:
    mode = _get(d, "mode", ptr)
    if mode == "equilibrium":
        seed = d.get("seed")
        if seed is not None:
            seed = _number(seed, f"{ptr}/seed", integer=True)
        pert = _number(d.get("perturbation", 0.0), f"{ptr}/perturbation")
        if pert < 0:
            raise ConfigError("perturbation must be non-negative", f"{ptr}/perturbation")
        if pert > 0 and seed is None:
            raise ConfigError("a perturbed start needs a seed", f"{ptr}/seed")
        return FromEquilibrium(_parse_selector(d.get("select", {}), n, f"{ptr}/select"), pert,
                               parse_angle(d.get("psi1", 0.0), f"{ptr}/psi1"), seed)
    if mode == "explicit":
        agents = _get(d, "agents", ptr)
        if not isinstance(agents, list) or len(agents) != n:
            raise ConfigError(f"expected {n} agents", f"{ptr}/agents")
        out = []
        for i, a in enumerate(agents):
            p = f"{ptr}/agents/{i}"
            out.append((_number(_get(a, "x", p), f"{p}/x"), _number(_get(a, "y", p), f"{p}/y"),
                        parse_angle(_get(a, "heading", p), f"{p}/heading")))
        return Explicit(tuple(out))
    if mode == "random":
        seed = _number(_get(d, "seed", ptr), f"{ptr}/seed", integer=True)
        return RandomInit(seed, _number(d.get("box", 2.0), f"{ptr}/box", positive=True))
    raise ConfigError("mode must be 'equilibrium', 'explicit' or 'random'", f"{ptr}/mode")


def _parse_event(d: dict, ptr: str):
    kind = _get(d, "kind", ptr)
    t = _number(_get(d, "time", ptr), f"{ptr}/time")
    if kind == "heading_kick":
        return HeadingKick(t, _number(_get(d, "agent", ptr), f"{ptr}/agent", integer=True),
                           parse_angle(_get(d, "delta", ptr), f"{ptr}/delta"))
    if kind == "beacon_move":
        pos = _get(d, "position", ptr)
        if not isinstance(pos, list) or len(pos) != 2:
            raise ConfigError("expected [x, y]", f"{ptr}/position")
        return BeaconMove(t, (_number(pos[0], f"{ptr}/position/0"), _number(pos[1], f"{ptr}/position/1")))
    raise ConfigError("kind must be 'heading_kick' or 'beacon_move'", f"{ptr}/kind")


def _parse_sim(d: dict, n: int, ptr: str) -> SimConfig:
    events = d.get("events", [])
    if not isinstance(events, list):
        raise ConfigError("expected a list", f"{ptr}/events")
    parsed = tuple(_parse_event(e, f"{ptr}/events/{i}") for i, e in enumerate(events))
    for i, e in enumerate(parsed):
        if isinstance(e, HeadingKick) and not 0 <= e.agent < n:
            raise ConfigError("agent index out of range", f"{ptr}/events/{i}/agent")
    try:
        return SimConfig(
            t_end=_number(_get(d, "t_end", ptr), f"{ptr}/t_end", positive=True),
            dt=_number(d.get("dt", 1e-3), f"{ptr}/dt", positive=True),
            integrator=d.get("integrator", "RK4"),
            representation=d.get("representation", "FullState"),
            events=parsed,
            record_every=_number(d.get("record_every", 100), f"{ptr}/record_every", positive=True, integer=True),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), ptr) from None


def _parse_sweep(d: dict, ptr: str) -> SweepConfig:
    grid = _get(d, "grid", ptr)
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("expected a non-empty object", f"{ptr}/grid")
    axes = []
    for name in SWEEP_AXES:
        if name not in grid:
            continue
        spec = grid[name]
        p = f"{ptr}/grid/{name}"
        conv = parse_angle if name in ANGLE_AXES else (lambda v, q: _number(v, q))
        if isinstance(spec, dict) and "values" in spec:
            vals = spec["values"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("expected a non-empty list", f"{p}/values")
            values = tuple(conv(v, f"{p}/values/{i}") for i, v in enumerate(vals))
        else:
            lo = conv(_get(spec, "min", p), f"{p}/min")
            hi = conv(_get(spec, "max", p), f"{p}/max")
            count = _number(_get(spec, "count", p), f"{p}/count", positive=True, integer=True)
            values = tuple(float(v) for v in np.linspace(lo, hi, count))
        axes.append((name, values))
    unknown = set(grid) - set(SWEEP_AXES)
    if unknown:
        raise ConfigError(f"unknown sweep axis {sorted(unknown)[0]!r}", f"{ptr}/grid/{sorted(unknown)[0]}")
    tag = d.get("type", "Type1-CCW")
    if tag not in ("Type1-CCW", "Type1-CW", "Type2-CCW", "Type2-CW"):
        raise ConfigError(f"unknown type {tag!r}", f"{ptr}/type")
    return SweepConfig(tag, tuple(axes))


def parse_scenario(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError("expected an object", "")
    version = _get(d, "version", "")
    if version != VERSION:
        raise ConfigError(f"unsupported version {version!r}", "/version")
    n = _number(_get(d, "n", ""), "/n", integer=True)
    if n < 2:
        raise ConfigError("need at least two agents", "/n")
    beacon = d.get("beacon", [0.0, 0.0])
    if not isinstance(beacon, list) or len(beacon) != 2:
        raise ConfigError("expected [x, y]", "/beacon")
    return Scenario(
        n=n,
        params=_parse_params(_get(d, "params", ""), n, "/params"),
        beacon=(_number(beacon[0], "/beacon/0"), _number(beacon[1], "/beacon/1")),
        initial=_parse_initial(d["initial"], n, "/initial") if "initial" in d else None,
        sim=_parse_sim(d["sim"], n, "/sim") if "sim" in d else None,
        outputs=d.get("outputs"),
        sweep=_parse_sweep(d["sweep"], "/sweep") if "sweep" in d else None,
        target=_parse_selector(d["target"], n, "/target") if "target" in d else None,
        version=version,
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "") from None
    return parse_scenario(data)


def _selector_dict(s: Selector) -> dict:
    out: dict[str, Any] = {"index": s.index}
    if s.type is not None:
        out["type"] = s.type
    if s.direction is not None:
        out["direction"] = "CCW" if s.direction > 0 else "CW"
    if s.sigma is not None:
        out["sigma"] = list(s.sigma)
    if s.m is not None:
        out["m"] = s.m
    return out


def scenario_to_dict(s: Scenario) -> dict:
    p = s.params
    params: dict[str, Any] = {"lambda": p.lam, "mu": p.mu, "alpha": list(p.alpha), "alpha0": p.alpha0}
    for key in ("mu_b", "alpha_b", "speeds"):
        if getattr(p, key) is not None:
            params[key] = list(getattr(p, key))
    out: dict[str, Any] = {"version": s.version, "n": s.n, "params": params, "beacon": list(s.beacon)}
    init = s.initial
    if isinstance(init, FromEquilibrium):
        out["initial"] = {"mode": "equilibrium", "select": _selector_dict(init.select),
                          "perturbation": init.perturbation, "psi1": init.psi1}
        if init.seed is not None:
            out["initial"]["seed"] = init.seed
    elif isinstance(init, Explicit):
        out["initial"] = {"mode": "explicit", "agents": [{"x": x, "y": y, "heading": h} for x, y, h in init.agents]}
    elif isinstance(init, RandomInit):
        out["initial"] = {"mode": "random", "seed": init.seed, "box": init.box}
    if s.sim is not None:
        events = []
        for e in s.sim.events:
            if isinstance(e, HeadingKick):
                events.append({"kind": "heading_kick", "time": e.time, "agent": e.agent, "delta": e.delta})
            else:
                events.append({"kind": "beacon_move", "time": e.time, "position": list(e.position)})
        out["sim"] = {"t_end": s.sim.t_end, "dt": s.sim.dt, "integrator": s.sim.integrator,
                      "representation": s.sim.representation, "record_every": s.sim.record_every,
                      "events": events}
    if s.outputs is not None:
        out["outputs"] = s.outputs
    if s.sweep is not None:
        out["sweep"] = {"type": s.sweep.type, "grid": {name: {"values": list(v)} for name, v in s.sweep.axes}}
    if s.target is not None:
        out["target"] = _selector_dict(s.target)
    return out
