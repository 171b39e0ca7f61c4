"""Circling relative equilibria: constructive enumeration and two-agent table.

At a circling equilibrium every agent sees the beacon abeam
(``kappa_b = s * pi/2``, ``s = +1`` CCW, ``-1`` CW), all agents share one
beacon distance, ``theta_{i+1} = pi - kappa_i`` and the beacon-frame angle
from agent i to agent i+1 is ``2 kappa_i``.

Each agent picks one of two branches ``kappa_i - alpha_i = a`` (sigma_i = +1)
or ``pi - a`` (sigma_i = -1) for a common angle ``a``; closure of the cycle
fixes ``a`` up to an integer ``m``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateFamily, NoSuchEquilibrium
from .frenet import ControlParams, wrap
from .shape import ShapeState, require_symmetric, shape_derivative

EPS_POS = 1e-12
DEDUP_TOL = 1e-9
TABLE_TAGS = ("Type1-CCW", "Type1-CW", "Type2-CCW", "Type2-CW")


@dataclass(frozen=True)
class EquilibriumSpec:
    sigma: tuple[int, ...]
    m: int
    direction: int
    alpha_star: float
    kappa: tuple[float, ...]
    kappa_b: float
    rho: tuple[float, ...]
    rho_b: float
    spacing: tuple[float, ...]
    gamma: float

    @property
    def n(self) -> int:
        return len(self.kappa)

    @property
    def direction_name(self) -> str:
        return "CCW" if self.direction > 0 else "CW"

    def shape(self) -> ShapeState:
        kappa = np.array(self.kappa)
        return ShapeState(
            rho=np.array(self.rho),
            kappa=kappa,
            theta=wrap(np.roll(math.pi - kappa, 1)),
            rho_b=np.full(self.n, self.rho_b),
            kappa_b=np.full(self.n, self.kappa_b),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["direction_name"] = self.direction_name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EquilibriumSpec":
        return cls(
            sigma=tuple(int(v) for v in d["sigma"]), m=int(d["m"]), direction=int(d["direction"]),
            alpha_star=float(d["alpha_star"]), kappa=tuple(map(float, d["kappa"])),
            kappa_b=float(d["kappa_b"]), rho=tuple(map(float, d["rho"])), rho_b=float(d["rho_b"]),
            spacing=tuple(map(float, d["spacing"])), gamma=float(d["gamma"]),
        )


def _analysis_params(params: ControlParams) -> tuple[float, float, float]:
    mu, alpha0 = require_symmetric(params)
    if not 0.0 < params.lam < 1.0:
        raise ValueError(f"equilibrium analysis needs 0 < lambda < 1, got {params.lam}")
    if mu <= 0:
        raise ValueError("equilibrium analysis needs a positive gain")
    return params.lam, mu, alpha0


def _circle_radius(lam: float, mu: float, alpha0: float, s: int, sin_a: float) -> float:
    return 1.0 / (mu * (1.0 / lam - 1.0) * s * sin_a + mu * math.cos(alpha0))


def _make_spec(sigma, m, s, a_star, kappa, lam, mu, alpha0) -> EquilibriumSpec:
    kappa = wrap(np.asarray(kappa, dtype=float))
    rho_b = _circle_radius(lam, mu, alpha0, s, math.sin(a_star))
    rho = 2.0 * rho_b * s * np.sin(kappa)
    return EquilibriumSpec(
        sigma=tuple(int(v) for v in sigma), m=int(m), direction=int(s), alpha_star=float(a_star),
        kappa=tuple(float(k) for k in kappa), kappa_b=s * math.pi / 2, rho=tuple(float(r) for r in rho),
        rho_b=float(rho_b), spacing=tuple(float(2 * k) for k in kappa), gamma=s / rho_b,
    )


def _circ_close(a, b, tol: float) -> bool:
    return bool(np.all(np.abs(wrap(np.asarray(a) - np.asarray(b))) < tol))


def same_equilibrium(a: EquilibriumSpec, b: EquilibriumSpec, tol: float = DEDUP_TOL) -> bool:
    return a.direction == b.direction and a.n == b.n and _circ_close(a.kappa, b.kappa, tol)


def continuum_branches(params: ControlParams) -> list[tuple[int, ...]]:
    """Branch signatures with ``2M = n`` whose closure admits a continuum of equilibria."""
    n = params.n
    if n % 2 or abs(math.sin(float(np.sum(params.alpha)))) > 1e-12:
        return []
    return [sig for sig in itertools.product((1, -1), repeat=n) if 2 * sig.count(1) == n]


def enumerate_equilibria(params: ControlParams, strict: bool = False) -> list[EquilibriumSpec]:
    """All isolated circling equilibria of the symmetric closed loop.

    Continuum families (even ``n``, balanced branch, ``sum(alpha)`` a multiple
    of pi) are skipped; see :func:`continuum_branches`. With ``strict=True``
    their presence raises :class:`DegenerateFamily` instead.
    """
    lam, mu, alpha0 = _analysis_params(params)
    n = params.n
    alpha = params.alpha
    total = float(np.sum(alpha))
    if continuum_branches(params):
        if strict:
            raise DegenerateFamily("balanced branches admit a continuum of circling equilibria")
    elif abs(math.sin(total)) < 1e-12:
        warnings.warn("sum of CB offsets is a multiple of pi; existence conditions are only necessary here",
                      RuntimeWarning, stacklevel=2)

    found: list[EquilibriumSpec] = []
    for sigma in itertools.product((1, -1), repeat=n):
        sig = np.array(sigma)
        big_m = int(np.sum(sig == 1))
        d = 2 * big_m - n
        if d == 0:
            continue
        # a_star is periodic in m with period 2|d| (mod 2 pi)
        for m in range(n - big_m - abs(d), n - big_m + abs(d)):
            a_star = ((m + big_m - n) * math.pi - total) / d
            for s in (1, -1):
                if lam * math.cos(alpha0) + (1 - lam) * s * math.sin(a_star) <= EPS_POS:
                    continue
                if np.any(s * np.sin(a_star + sig * alpha) <= EPS_POS):
                    continue
                kappa = np.pi * (1 - sig) / 2 + sig * a_star + alpha
                spec = _make_spec(sigma, m, s, a_star, kappa, lam, mu, alpha0)
                if not any(same_equilibrium(spec, other) for other in found):
                    found.append(spec)
    return found


def two_agent_row(params: ControlParams, tag: str) -> EquilibriumSpec:
    """Closed-form two-agent equilibrium of the given type, without existence checks."""
    if tag not in TABLE_TAGS:
        raise ValueError(f"unknown type tag {tag!r}")
    lam, mu, alpha0 = _analysis_params(params)
    if params.n != 2:
        raise ValueError("two-agent table needs n = 2")
    a1, a2 = params.alpha
    a_plus, a_minus = (a1 + a2) / 2, (a1 - a2) / 2
    type1 = tag.startswith("Type1")
    s = 1 if tag.endswith("-CCW") else -1
    # Type 1 CCW and Type 2 CW share kappa; so do Type 1 CW and Type 2 CCW
    upper = type1 == (s > 0)
    if upper:
        kappa = (math.pi / 2 + a_minus, math.pi / 2 - a_minus)
        m = 1
    else:
        kappa = (-math.pi / 2 + a_minus, -math.pi / 2 - a_minus)
        m = -1
    sign = 1.0 if type1 else -1.0
    denom = mu * lam * math.cos(alpha0) + sign * mu * (1 - lam) * math.cos(a_plus)
    rho_b = lam / denom
    rho_pair = 2 * lam * math.cos(a_minus) / (sign * denom)
    kw = wrap(np.array(kappa))
    return EquilibriumSpec(
        sigma=(1, 1), m=m, direction=s, alpha_star=float(wrap(kappa[0] - a1)),
        kappa=tuple(float(k) for k in kw), kappa_b=s * math.pi / 2, rho=(rho_pair, rho_pair),
        rho_b=rho_b, spacing=tuple(float(2 * k) for k in kw), gamma=s / rho_b,
    )


def two_agent_exists(params: ControlParams, tag: str) -> bool:
    lam, mu, alpha0 = _analysis_params(params)
    a1, a2 = params.alpha
    a_plus, a_minus = (a1 + a2) / 2, (a1 - a2) / 2
    if tag.startswith("Type1"):
        return math.cos(a_minus) > EPS_POS and lam * math.cos(alpha0) + (1 - lam) * math.cos(a_plus) > EPS_POS
    return math.cos(a_minus) < -EPS_POS and lam * math.cos(alpha0) - (1 - lam) * math.cos(a_plus) > EPS_POS


def classify_two_agent(params: ControlParams) -> list[tuple[EquilibriumSpec, str]]:
    """Two-agent table rows whose existence conditions hold, with their type tags."""
    if params.n != 2:
        raise ValueError("two-agent classification needs n = 2")
    _analysis_params(params)
    a_plus = float(np.sum(params.alpha)) / 2
    if abs(math.sin(2 * a_plus)) < 1e-12:
        raise DegenerateFamily("sin(alpha1 + alpha2) = 0: two-agent table does not apply")
    return [(two_agent_row(params, tag), tag) for tag in TABLE_TAGS if two_agent_exists(params, tag)]


def tag_of(spec: EquilibriumSpec, params: ControlParams) -> str | None:
    """Table type tag of a two-agent spec, if it matches a table row."""
    if spec.n != 2:
        return None
    for tag in TABLE_TAGS:
        row = two_agent_row(params, tag)
        if same_equilibrium(spec, row, 1e-7):
            return tag
    return None


def equilibrium_residual(spec: EquilibriumSpec, params: ControlParams) -> float:
    """Max-norm of the shape vector field at the equilibrium point.

    Raises :class:`NoSuchEquilibrium` when the spec violates positivity.
    """
    if spec.rho_b <= 0 or min(spec.rho) <= 0:
        raise NoSuchEquilibrium(f"non-positive distances (rho_b = {spec.rho_b:.4g}, "
                                f"min rho = {min(spec.rho):.4g})")
    return float(np.abs(shape_derivative(spec.shape(), params).to_vector()).max())
