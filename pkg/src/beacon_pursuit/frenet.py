"""Full-state planar particle model and the beacon-referenced CB steering law.

Each agent is a unit-mass self-steering particle: position ``r_i``, heading
angle ``h_i`` (unit velocity ``x_i = (cos h_i, sin h_i)``, ``y_i`` its CCW
normal), speed ``nu_i`` and curvature control ``u_i``::

    r_i' = nu_i x_i,    h_i' = nu_i u_i

Agent ``i`` pursues agent ``i + 1`` (indices mod n) and references a fixed
beacon. The world frame is the beacon frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DegenerateGeometry

EPS_GEOM = 1e-9
TWO_PI = 2.0 * math.pi


def wrap(angle):
    """Wrap angle(s) to [-pi, pi)."""
    out = np.mod(np.asarray(angle, dtype=float) + math.pi, TWO_PI) - math.pi
    out = np.where(out >= math.pi, out - TWO_PI, out)
    return float(out) if out.ndim == 0 else out


def rot(theta: float) -> np.ndarray:
    """CCW planar rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class AgentState:
    position: tuple[float, float]
    heading: float
    speed: float = 1.0

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError(f"speed must be positive, got {self.speed}")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", float(wrap(self.heading)))

    @property
    def x(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading)])

    @property
    def y(self) -> np.ndarray:
        return np.array([-math.sin(self.heading), math.cos(self.heading)])


@dataclass(eq=False)
class WorldState:
    """All agents plus the beacon, stored as arrays.

    ``positions`` is (n, 2), ``headings`` and ``speeds`` are (n,).
    Headings are wrapped on construction. The dynamics take speeds from
    :class:`ControlParams`; ``speeds`` here only records them.
    """

    positions: np.ndarray
    headings: np.ndarray
    beacon: np.ndarray = field(default_factory=lambda: np.zeros(2))
    speeds: np.ndarray | None = None
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float).reshape(-1, 2)
        n = len(self.positions)
        if n < 2:
            raise ValueError("need at least two agents")
        self.headings = wrap(np.array(self.headings, dtype=float).reshape(n))
        self.beacon = np.array(self.beacon, dtype=float).reshape(2)
        if self.speeds is None:
            self.speeds = np.ones(n)
        self.speeds = np.broadcast_to(np.asarray(self.speeds, dtype=float), (n,)).copy()
        if np.any(self.speeds <= 0):
            raise ValueError("speeds must be positive")
        self.time = float(self.time)

    @classmethod
    def from_agents(cls, agents: Sequence[AgentState], beacon=(0.0, 0.0), time: float = 0.0) -> "WorldState":
        return cls(
            positions=[a.position for a in agents],
            headings=[a.heading for a in agents],
            beacon=beacon,
            speeds=[a.speed for a in agents],
            time=time,
        )

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def agents(self) -> list[AgentState]:
        return [AgentState(tuple(p), h, v) for p, h, v in zip(self.positions, self.headings, self.speeds)]

    def copy(self, **changes) -> "WorldState":
        kw = dict(positions=self.positions.copy(), headings=self.headings.copy(), beacon=self.beacon.copy(),
                  speeds=self.speeds.copy(), time=self.time)
        kw.update(changes)
        return WorldState(**kw)

    def check_geometry(self, eps: float = EPS_GEOM) -> None:
        d_next = np.linalg.norm(np.roll(self.positions, -1, axis=0) - self.positions, axis=1)
        d_beacon = np.linalg.norm(self.beacon - self.positions, axis=1)
        if d_next.min() < eps or d_beacon.min() < eps:
            raise DegenerateGeometry(
                f"min neighbor distance {d_next.min():.3g} m, min beacon distance {d_beacon.min():.3g} m")

    def to_vector(self) -> np.ndarray:
        """Flat ODE state ``[x_1..x_n, y_1..y_n, h_1..h_n]``."""
        return np.concatenate([self.positions[:, 0], self.positions[:, 1], self.headings])

    def with_vector(self, y: np.ndarray, time: float) -> "WorldState":
        n = self.n
        return WorldState(np.column_stack([y[:n], y[n:2 * n]]), y[2 * n:], self.beacon.copy(), self.speeds.copy(), time)


@dataclass(eq=False)
class ControlParams:
    """Per-agent parameters of the steering law.

    ``lam`` weights the beacon term against the neighbor (CB) term. Gains
    are in 1/m. The simulator accepts ``lam`` in [0, 1] and non-negative
    gains; analysis routines demand the open interval and positive gains.
    """

    lam: float
    mu: np.ndarray
    mu_b: np.ndarray
    alpha: np.ndarray
    alpha_b: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        self.lam = float(self.lam)
        n = len(np.atleast_1d(self.alpha))
        for name in ("mu", "mu_b", "alpha", "alpha_b", "speeds"):
            setattr(self, name, np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)).copy())
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if np.any(self.mu < 0) or np.any(self.mu_b < 0):
            raise ValueError("gains must be non-negative")
        if np.any(self.speeds <= 0):
            raise ValueError("speeds must be positive")

    @classmethod
    def symmetric(cls, lam: float, mu: float, alpha, alpha0: float, n: int | None = None) -> "ControlParams":
        """Equal unit speeds, equal gains ``mu_i = mu_i^b = mu``, common beacon offset ``alpha0``."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        if n is not None and len(alpha) == 1:
            alpha = np.repeat(alpha, n)
        return cls(lam, mu, mu, alpha, alpha0, 1.0)

    @property
    def n(self) -> int:
        return len(self.alpha)

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return (np.ptp(self.speeds) <= tol and abs(self.speeds[0] - 1.0) <= tol
                and np.ptp(np.concatenate([self.mu, self.mu_b])) <= tol
                and np.ptp(wrap(self.alpha_b - self.alpha_b[0])) <= tol)

    @property
    def mu0(self) -> float:
        return float(self.mu[0])

    @property
    def alpha0(self) -> float:
        return float(self.alpha_b[0])


@njit(cache=True)
def _curvatures(y, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, out):
    """Evaluate u_i for all agents; returns False on degenerate geometry."""
    n = nu.shape[0]
    for i in range(n):
        j = (i + 1) % n
        hx, hy = math.cos(y[2 * n + i]), math.sin(y[2 * n + i])
        gx, gy = math.cos(y[2 * n + j]), math.sin(y[2 * n + j])
        # r_{i,i+1} = r_i - r_{i+1}
        dx = y[i] - y[j]
        dy = y[n + i] - y[n + j]
        d = math.hypot(dx, dy)
        bxr = y[i] - bx
        byr = y[n + i] - by
        db = math.hypot(bxr, byr)
        if d < eps or db < eps:
            return False
        ex, ey = dx / d, dy / d
        # R(alpha_i) y_i, with y_i = (-sin h, cos h)
        ca, sa = math.cos(alpha[i]), math.sin(alpha[i])
        ryx = ca * (-hy) - sa * hx
        ryy = sa * (-hy) + ca * hx
        # R(pi/2) applied to r_{i,i+1}' = nu_i x_i - nu_{i+1} x_{i+1}
        vx = nu[i] * hx - nu[j] * gx
        vy = nu[i] * hy - nu[j] * gy
        u_cb = -mu[i] * (ryx * ex + ryy * ey) - (ex * (-vy) + ey * vx) / (nu[i] * d)
        cb, sb = math.cos(alpha_b[i]), math.sin(alpha_b[i])
        rbx = cb * (-hy) - sb * hx
        rby = sb * (-hy) + cb * hx
        u_b = -mu_b[i] * (rbx * bxr + rby * byr) / db
        out[i] = (1.0 - lam) * u_cb + lam * u_b
    return True


@njit(cache=True)
def _world_rhs(y, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u, dy):
    n = nu.shape[0]
    if not _curvatures(y, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u):
        return False
    for i in range(n):
        h = y[2 * n + i]
        dy[i] = nu[i] * math.cos(h)
        dy[n + i] = nu[i] * math.sin(h)
        dy[2 * n + i] = nu[i] * u[i]
    return True


@njit(cache=True)
def _advance_world(y, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, dt, nsteps, rk4):
    """Take ``nsteps`` fixed steps in place. Returns the number completed."""
    m = y.shape[0]
    n = nu.shape[0]
    u = np.empty(n)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    for step in range(nsteps):
        if not _world_rhs(y, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u, k1):
            return step
        if not rk4:
            for q in range(m):
                y[q] += dt * k1[q]
            continue
        for q in range(m):
            tmp[q] = y[q] + 0.5 * dt * k1[q]
        if not _world_rhs(tmp, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u, k2):
            return step
        for q in range(m):
            tmp[q] = y[q] + 0.5 * dt * k2[q]
        if not _world_rhs(tmp, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u, k3):
            return step
        for q in range(m):
            tmp[q] = y[q] + dt * k3[q]
        if not _world_rhs(tmp, nu, bx, by, lam, mu, mu_b, alpha, alpha_b, eps, u, k4):
            return step
        for q in range(m):
            y[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
    return nsteps


def _kernel_args(world: WorldState, params: ControlParams):
    if params.n != world.n:
        raise ValueError(f"params are for {params.n} agents, world has {world.n}")
    return (params.speeds, float(world.beacon[0]), float(world.beacon[1]), params.lam,
            params.mu, params.mu_b, params.alpha, params.alpha_b, EPS_GEOM)


def control_all(world: WorldState, params: ControlParams) -> np.ndarray:
    """Curvature command of every agent, Cartesian form."""
    u = np.empty(world.n)
    if not _curvatures(world.to_vector(), *_kernel_args(world, params), u):
        world.check_geometry()
        raise DegenerateGeometry("degenerate geometry")
    return u


def control_cartesian(world: WorldState, params: ControlParams, i: int) -> float:
    """Curvature ``u_i = (1 - lam) u_CB + lam u_B`` from positions and headings."""
    return float(control_all(world, params)[i])


def full_state_derivative(world: WorldState, params: ControlParams) -> np.ndarray:
    """Time derivative of ``world.to_vector()``; the beacon is stationary."""
    n = world.n
    dy = np.empty(3 * n)
    if not _world_rhs(world.to_vector(), *_kernel_args(world, params), np.empty(n), dy):
        world.check_geometry()
        raise DegenerateGeometry("degenerate geometry")
    return dy


def _bearing(v: np.ndarray) -> np.ndarray:
    return np.arctan2(v[..., 1], v[..., 0])


def extract_shape(world: WorldState):
    """Scalar shape variables of a world state (see :class:`ShapeState`)."""
    from .shape import ShapeState

    world.check_geometry()
    r = world.positions
    h = world.headings
    to_next = np.roll(r, -1, axis=0) - r       # r_{i+1,i}
    to_prev = np.roll(r, 1, axis=0) - r        # -r_{i,i-1}
    to_beacon = world.beacon - r               # r_{b,i}
    return ShapeState(
        rho=np.linalg.norm(to_next, axis=1),
        kappa=wrap(_bearing(to_next) - h),
        theta=wrap(_bearing(to_prev) - h),
        rho_b=np.linalg.norm(to_beacon, axis=1),
        kappa_b=wrap(_bearing(to_beacon) - h),
    )


def beacon_spacing(world: WorldState) -> np.ndarray:
    """CCW angle at the beacon from agent i to agent i+1, in [0, 2pi)."""
    a = _bearing(world.positions - world.beacon)
    return np.mod(np.roll(a, -1) - a, TWO_PI)
