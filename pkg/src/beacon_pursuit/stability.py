"""Linear stability of circling equilibria.

Two routes:

* analytic (two agents only): closed-form characteristic polynomial of the
  reduced 7-state linearisation and the Routh-Hurwitz sign conditions;
* numeric (any n): central-difference Jacobian of the shape vector field and
  a dense eigen-solve.

The constraint manifold always contributes neutral modes (a pair ``+-j delta``
for two agents, ``2n + 1`` modes for n agents) that say nothing about stability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .equilibria import (EquilibriumSpec, _analysis_params, equilibrium_residual, tag_of, two_agent_exists,
                         two_agent_row)
from .errors import IllConditioned, NoSuchEquilibrium
from .frenet import ControlParams
from .shape import shape_vector_field, two_agent_reduced_derivative

H_FD = 1e-6
EPS_STAB = 1e-7
EPS_BOUNDARY = 1e-12

STABLE, UNSTABLE, MARGINAL = "Stable", "Unstable", "Marginal"


def _effective_angles(params: ControlParams, tag: str) -> tuple[float, float]:
    """Beacon offset and mean CB offset that map ``tag`` onto the Type-1 CCW case.

    Mirroring all angles maps CCW onto CW; shifting both CB offsets by pi
    (together with ``rho -> -rho``) maps Type 2 onto Type 1.
    """
    a0 = params.alpha0
    a_plus = float(np.sum(params.alpha)) / 2
    return {
        "Type1-CCW": (a0, a_plus),
        "Type1-CW": (-a0, -a_plus),
        "Type2-CCW": (a0, a_plus + math.pi),
        "Type2-CW": (-a0, math.pi - a_plus),
    }[tag]


@dataclass(frozen=True)
class TwoAgentCoefficients:
    lam: float
    mu: float
    delta: float
    psi: float
    sin_plus: float
    sin_beacon: float


def two_agent_coefficients(params: ControlParams, tag: str) -> TwoAgentCoefficients:
    lam, mu, _ = _analysis_params(params)
    if params.n != 2:
        raise ValueError("analytic stability is for two agents")
    if not two_agent_exists(params, tag):
        raise NoSuchEquilibrium(f"{tag} equilibrium does not exist for these parameters")
    a0, ap = _effective_angles(params, tag)
    k = (1 - lam) / lam
    return TwoAgentCoefficients(
        lam=lam, mu=mu,
        delta=mu * (math.cos(a0) + k * math.cos(ap)),
        psi=mu * (math.sin(a0) + k * math.sin(ap)),
        sin_plus=math.sin(ap), sin_beacon=math.sin(a0),
    )


def _factors(c: TwoAgentCoefficients) -> list[np.ndarray]:
    d2 = c.delta ** 2
    return [
        np.array([1.0, 0.0, d2]),
        np.array([1.0, c.lam * c.psi, c.lam * d2]),
        np.array([1.0, c.lam * c.psi, d2, (1 - c.lam) * c.mu * c.sin_plus * d2]),
    ]


def char_poly_two_agent(params: ControlParams, tag: str) -> np.ndarray:
    """Degree-7 characteristic polynomial coefficients, highest power first."""
    out = np.array([1.0])
    for f in _factors(two_agent_coefficients(params, tag)):
        out = np.polymul(out, f)
    return out


def _quadratic_roots(b: float, c: float) -> list[complex]:
    disc = complex(b * b - 4 * c)
    sq = disc ** 0.5
    # avoid cancellation
    q = -0.5 * (b + (sq if b >= 0 else -sq))
    if q == 0:
        return [0j, 0j]
    return [q, c / q]


def poly_roots_two_agent(params: ControlParams, tag: str) -> np.ndarray:
    """Roots of the characteristic polynomial, factor by factor."""
    c = two_agent_coefficients(params, tag)
    quad, cubic = _factors(c)[1:]
    roots = [1j * c.delta, -1j * c.delta]
    roots += _quadratic_roots(quad[1], quad[2])
    roots += list(np.roots(cubic))
    return np.array(roots, dtype=complex)


def routh_classify(params: ControlParams, tag: str) -> tuple[str, dict]:
    """Classification of a two-agent equilibrium from the Routh-Hurwitz chain.

    ``conditions`` holds both the two-sign criterion and the underlying chain
    (quadratic: ``psi > 0``; cubic: ``psi > 0``, ``sin a+ > 0``,
    ``lam psi - (1 - lam) mu sin a+ > 0``), in the Type-1 CCW frame.
    """
    c = two_agent_coefficients(params, tag)
    chain = {
        "psi": c.psi,
        "sin_alpha_plus": c.sin_plus,
        "hurwitz_cubic": c.lam * c.psi - (1 - c.lam) * c.mu * c.sin_plus,
    }
    values = np.array(list(chain.values()))
    if np.all(values > EPS_BOUNDARY):
        cls = STABLE
    elif np.any(values < -EPS_BOUNDARY):
        cls = UNSTABLE
    else:
        cls = MARGINAL
    conditions = {
        "sin_alpha0_positive": c.sin_beacon > 0,
        "sin_alpha_plus_positive": c.sin_plus > 0,
        "sign_rule_stable": c.sin_beacon > 0 and c.sin_plus > 0,
        "routh_chain": {k: float(v) for k, v in chain.items()},
        "effective_frame": "Type1-CCW",
    }
    return cls, conditions


def fd_jacobian(f, x: np.ndarray, h: float = H_FD) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.column_stack(cols)


def reduced_coordinates(spec: EquilibriumSpec) -> np.ndarray:
    """Equilibrium point in the numeric-oracle coordinates."""
    if spec.n == 2:
        k1, k2 = spec.kappa
        return np.array([k1, k2, spec.rho[0], spec.kappa_b, spec.kappa_b, spec.rho_b, spec.rho_b])
    return spec.shape().to_vector()


def equilibrium_jacobian(spec: EquilibriumSpec, params: ControlParams, h: float = H_FD) -> np.ndarray:
    if spec.n == 2:
        f = lambda xi: two_agent_reduced_derivative(xi, params)  # noqa: E731
    else:
        f = shape_vector_field(params)
    return fd_jacobian(f, reduced_coordinates(spec), h)


def numeric_eigenvalues(spec: EquilibriumSpec, params: ControlParams, h: float = H_FD) -> np.ndarray:
    """Eigenvalues of the finite-difference Jacobian at ``spec``."""
    res = equilibrium_residual(spec, params)
    if res > 1e-8:
        raise NoSuchEquilibrium(f"spec is not an equilibrium of these dynamics (residual {res:.3g})")
    a = equilibrium_jacobian(spec, params, h)
    w, v = np.linalg.eig(a)
    err = np.linalg.norm(a @ v - v * w, axis=0) / np.linalg.norm(v, axis=0)
    if err.max() > 1e-6:
        raise IllConditioned(f"eigenpair residual {err.max():.3g}")
    return w


def match_roots(a, b) -> float:
    """Max distance between two root multisets under the optimal pairing."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("root sets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].max())


def split_structural(eigs: np.ndarray, n: int, delta: float | None = None,
                     eps: float = EPS_STAB) -> np.ndarray:
    """Boolean mask of constraint-induced modes.

    With ``delta`` (two agents): the eigenvalues nearest ``+j delta`` and
    ``-j delta``. Otherwise every eigenvalue with ``|Re| < eps``.
    """
    eigs = np.asarray(eigs)
    mask = np.zeros(len(eigs), dtype=bool)
    if delta is not None:
        for target in (1j * delta, -1j * delta):
            d = np.abs(eigs - target)
            d[mask] = np.inf
            mask[int(np.argmin(d))] = True
    else:
        mask = np.abs(eigs.real) < eps
    return mask


def classify_eigenvalues(eigs: np.ndarray, structural: np.ndarray, eps: float = EPS_STAB) -> str:
    rest = np.asarray(eigs)[~structural]
    if np.all(rest.real < -eps):
        return STABLE
    if np.any(rest.real > eps):
        return UNSTABLE
    return MARGINAL


@dataclass
class StabilityReport:
    n: int
    tag: str | None
    spec: EquilibriumSpec
    numeric_eigs: np.ndarray
    structural: np.ndarray
    numeric_classification: str
    classification: str
    delta: float | None = None
    psi_coef: float | None = None
    poly_roots: np.ndarray | None = None
    conditions: dict = field(default_factory=dict)
    discrepancy: float | None = None

    def to_dict(self) -> dict:
        def cl(z):
            return None if z is None else [[float(v.real), float(v.imag)] for v in np.asarray(z)]

        return {
            "n": self.n,
            "type": self.tag,
            "equilibrium": self.spec.to_dict(),
            "classification": self.classification,
            "numeric_classification": self.numeric_classification,
            "delta": self.delta,
            "psi_coef": self.psi_coef,
            "poly_roots": cl(self.poly_roots),
            "numeric_eigs": cl(self.numeric_eigs),
            "structural_modes": [bool(b) for b in self.structural],
            "n_structural": int(np.sum(self.structural)),
            "conditions": self.conditions,
            "max_root_discrepancy": self.discrepancy,
        }


def analyze(spec: EquilibriumSpec, params: ControlParams, tag: str | None = None) -> StabilityReport:
    """Stability report for one equilibrium.

    Two-agent equilibria matching a table row also get the analytic part.
    """
    eigs = numeric_eigenvalues(spec, params)
    if tag is None and spec.n == 2:
        tag = tag_of(spec, params)
    if tag is not None:
        coef = two_agent_coefficients(params, tag)
        roots = poly_roots_two_agent(params, tag)
        cls, cond = routh_classify(params, tag)
        structural = split_structural(eigs, 2, coef.delta)
        return StabilityReport(
            n=spec.n, tag=tag, spec=spec, numeric_eigs=eigs, structural=structural,
            numeric_classification=classify_eigenvalues(eigs, structural), classification=cls,
            delta=coef.delta, psi_coef=coef.psi, poly_roots=roots, conditions=cond,
            discrepancy=match_roots(roots, eigs),
        )
    structural = split_structural(eigs, spec.n)
    cls = classify_eigenvalues(eigs, structural)
    return StabilityReport(n=spec.n, tag=None, spec=spec, numeric_eigs=eigs, structural=structural,
                           numeric_classification=cls, classification=cls,
                           conditions={"expected_structural": 2 * spec.n + 1 if spec.n > 2 else 2})


def two_agent_table_spec(params: ControlParams, tag: str) -> EquilibriumSpec:
    if not two_agent_exists(params, tag):
        raise NoSuchEquilibrium(f"{tag} equilibrium does not exist for these parameters")
    return two_agent_row(params, tag)
