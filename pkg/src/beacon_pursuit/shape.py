"""Reduced shape-space description of the closed-loop system.

For agent ``i`` the shape variables are

* ``rho[i]``     distance to agent i+1,
* ``kappa[i]``   angle from the heading to agent i+1,
* ``theta[i]``   angle from the heading to agent i-1,
* ``rho_b[i]``   distance to the beacon,
* ``kappa_b[i]`` angle from the heading to the beacon.

They are redundant; :func:`closure_residual` measures how far a point is
from the set realisable by actual agent positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, DegenerateGeometry, InconsistentShape
from .frenet import EPS_GEOM, ControlParams, WorldState, wrap

EPS_CONSISTENCY = 1e-8


@dataclass(eq=False)
class ShapeState:
    rho: np.ndarray
    kappa: np.ndarray
    theta: np.ndarray
    rho_b: np.ndarray
    kappa_b: np.ndarray

    def __post_init__(self):
        n = len(np.atleast_1d(self.rho))
        for name in ("rho", "kappa", "theta", "rho_b", "kappa_b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, np.broadcast_to(arr, (n,)).copy())

    @property
    def n(self) -> int:
        return len(self.rho)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.kappa, self.theta, self.rho_b, self.kappa_b])

    @classmethod
    def from_vector(cls, z: np.ndarray) -> "ShapeState":
        return cls(*np.asarray(z, dtype=float).reshape(5, -1))

    def wrapped(self) -> "ShapeState":
        return ShapeState(self.rho, wrap(self.kappa), wrap(self.theta), self.rho_b, wrap(self.kappa_b))


def _check_positive(shape: ShapeState) -> None:
    if shape.rho.min() < EPS_GEOM or shape.rho_b.min() < EPS_GEOM:
        raise DegenerateGeometry(f"shape distances must be positive (min rho {shape.rho.min():.3g}, "
                                 f"min rho_b {shape.rho_b.min():.3g})")


def control_shape(shape: ShapeState, params: ControlParams, i: int) -> float:
    """Curvature u_i written in shape variables (same law as the Cartesian form)."""
    n = shape.n
    j = (i + 1) % n
    if shape.rho[i] < EPS_GEOM:
        raise DegenerateGeometry(f"rho[{i}] = {shape.rho[i]:.3g}")
    lam = params.lam
    nu = params.speeds
    return float(
        lam * params.mu_b[i] * math.sin(shape.kappa_b[i] - params.alpha_b[i])
        + (1 - lam) * params.mu[i] * math.sin(shape.kappa[i] - params.alpha[i])
        + (1 - lam) / shape.rho[i] * (math.sin(shape.kappa[i]) + nu[j] / nu[i] * math.sin(shape.theta[j]))
    )


def require_symmetric(params: ControlParams) -> tuple[float, float]:
    """Return ``(mu, alpha0)`` or raise if the parameters are not symmetric."""
    if not params.is_symmetric(tol=1e-12):
        raise AssumptionViolation("shape analysis needs unit equal speeds, mu_i = mu_i^b = mu "
                                  "and a common beacon offset alpha_ib = alpha0")
    return params.mu0, params.alpha0


def _shape_rhs(z: np.ndarray, lam: float, mu: float, alpha: np.ndarray, alpha0: float) -> np.ndarray:
    rho, kappa, theta, rho_b, kappa_b = z.reshape(5, -1)
    theta_next = np.roll(theta, -1)
    # baseline rotation rate of arc i, seen from agent i
    w = (np.sin(kappa) + np.sin(theta_next)) / rho
    kappa_dot = -mu * ((1 - lam) * np.sin(kappa - alpha) + lam * np.sin(kappa_b - alpha0)) + lam * w
    return np.concatenate([
        -(np.cos(kappa) + np.cos(theta_next)),
        kappa_dot,
        kappa_dot - w + np.roll(w, 1),
        -np.cos(kappa_b),
        kappa_dot - w + np.sin(kappa_b) / rho_b,
    ])


def shape_derivative(shape: ShapeState, params: ControlParams) -> ShapeState:
    """Closed-loop shape dynamics for unit speeds, equal gains and common beacon offset."""
    mu, alpha0 = require_symmetric(params)
    _check_positive(shape)
    return ShapeState.from_vector(_shape_rhs(shape.to_vector(), params.lam, mu, params.alpha, alpha0))


def shape_vector_field(params: ControlParams):
    """``f(z)`` on flat shape vectors, for integrators and Jacobians."""
    mu, alpha0 = require_symmetric(params)
    lam, alpha = params.lam, params.alpha.copy()

    def f(z):
        rho = z[: len(alpha)]
        rho_b = z[3 * len(alpha): 4 * len(alpha)]
        if rho.min() < EPS_GEOM or rho_b.min() < EPS_GEOM:
            raise DegenerateGeometry("shape distance below tolerance")
        return _shape_rhs(z, lam, mu, alpha, alpha0)

    return f


def two_agent_reduced_derivative(xi: np.ndarray, params: ControlParams) -> np.ndarray:
    """Two-agent dynamics on ``xi = (kappa1, kappa2, rho, kappa1b, kappa2b, rho1b, rho2b)``.

    Uses ``rho_1 = rho_2 = rho`` and ``theta_i = kappa_i``, which hold on every
    two-agent configuration.
    """
    mu, a0 = require_symmetric(params)
    if params.n != 2:
        raise ValueError("reduced dynamics are for two agents")
    k1, k2, rho, k1b, k2b, r1b, r2b = xi
    lam = params.lam
    a1, a2 = params.alpha
    w = (math.sin(k1) + math.sin(k2)) / rho
    k1d = -mu * ((1 - lam) * math.sin(k1 - a1) + lam * math.sin(k1b - a0)) + lam * w
    k2d = -mu * ((1 - lam) * math.sin(k2 - a2) + lam * math.sin(k2b - a0)) + lam * w
    return np.array([
        k1d,
        k2d,
        -(math.cos(k1) + math.cos(k2)),
        k1d - w + math.sin(k1b) / r1b,
        k2d - w + math.sin(k2b) / r2b,
        -math.cos(k1b),
        -math.cos(k2b),
    ])


def two_agent_constraints(xi: np.ndarray) -> np.ndarray:
    """Scalar constraints ``(g1, g2)`` of the two-agent reduced state."""
    k1, k2, rho, k1b, k2b, r1b, r2b = xi
    return np.array([
        rho - r1b * math.cos(k1b - k1) - r2b * math.cos(k2b - k2),
        r1b * math.sin(k1b - k1) + r2b * math.sin(k2b - k2),
    ])


def closure_residual(shape: ShapeState) -> tuple[float, np.ndarray]:
    """Angle residual of the cycle closure and one 2-vector residual per arc.

    The arc-i vector residual is the first column of
    ``rho_i I - rho_ib R(kappa_ib - kappa_i) - rho_{i+1,b} R(kappa_{i+1,b} - theta_{i+1})``.
    """
    theta_next = np.roll(shape.theta, -1)
    rho_b_next = np.roll(shape.rho_b, -1)
    kappa_b_next = np.roll(shape.kappa_b, -1)
    angle = wrap(np.sum(math.pi + shape.kappa - theta_next))
    a = shape.kappa_b - shape.kappa
    b = kappa_b_next - theta_next
    vec = np.column_stack([
        shape.rho - shape.rho_b * np.cos(a) - rho_b_next * np.cos(b),
        -shape.rho_b * np.sin(a) - rho_b_next * np.sin(b),
    ])
    return float(angle), vec


def max_residual(shape: ShapeState) -> float:
    angle, vec = closure_residual(shape)
    return max(abs(angle), float(np.abs(vec).max()))


def spacing_from_shape(shape: ShapeState) -> np.ndarray:
    """CCW angle at the beacon from agent i to agent i+1, in [0, 2pi)."""
    theta_next = np.roll(shape.theta, -1)
    kappa_b_next = np.roll(shape.kappa_b, -1)
    return np.mod(math.pi + shape.kappa - theta_next + kappa_b_next - shape.kappa_b, 2 * math.pi)


def reconstruct_world(shape: ShapeState, beacon=(0.0, 0.0), psi1: float = 0.0,
                      speeds=None) -> WorldState:
    """Place agents in the plane so that :func:`extract_shape` returns ``shape``.

    Agent 1 sits at distance ``rho_b[0]`` from the beacon, at beacon-frame
    angle ``-psi1``; the rest are chained along the arcs. Different ``psi1``
    give worlds rotated about the beacon.
    """
    res = max_residual(shape)
    if res > EPS_CONSISTENCY:
        raise InconsistentShape(f"closure residual {res:.3g} exceeds {EPS_CONSISTENCY:g}")
    _check_positive(shape)
    n = shape.n
    beacon = np.asarray(beacon, dtype=float)
    pos = np.empty((n, 2))
    head = np.empty(n)
    pos[0] = beacon + shape.rho_b[0] * np.array([math.cos(-psi1), math.sin(-psi1)])
    # bearing of r_b - r_1 is pi - psi1 = heading + kappa_1b
    head[0] = math.pi - psi1 - shape.kappa_b[0]
    for i in range(n - 1):
        d = head[i] + shape.kappa[i]
        pos[i + 1] = pos[i] + shape.rho[i] * np.array([math.cos(d), math.sin(d)])
        head[i + 1] = d + math.pi - shape.theta[i + 1]
    return WorldState(pos, head, beacon, speeds)
