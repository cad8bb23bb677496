"""Ground state evaluation and the quadrature identity for kappa.

W(r) = (1 + r^2/15)^(-3/2) is the radial ground state in R^5 and
LW = (3/2 + r d/dr) W its scaling derivative.  The interaction constant
satisfies

    kappa = (3/2) * 15^(3/2) * int_{R^5} W^(7/3) dx / ||LW||_L2^2,

which verify_kappa reproduces with composite panel quadrature on [0, r_max]
plus an analytic power-law tail, and compares against the closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import kappa_closed_form
from .errors import InvalidInput, NumericalFailure

__all__ = [
    "QuadratureSpec",
    "KappaReport",
    "QuadratureDiverged",
    "ground_state",
    "ground_state_prime",
    "ground_state_second",
    "lambda_w",
    "verify_kappa",
]

# area of the unit 4-sphere: a radial integral over R^5 carries weight OMEGA4 * r^4
OMEGA4 = 8.0 * math.pi**2 / 3.0

RULES = ("gauss-legendre", "simpson")
GL_NODES_PER_PANEL = 8


class QuadratureDiverged(NumericalFailure):
    """Panel refinement failed to reduce the estimated quadrature error."""


def ground_state(r):
    """W(r) = (1 + r^2/15)^(-3/2); accepts scalars or arrays, r >= 0."""
    r = np.asarray(r, dtype=float)
    out = (1.0 + r * r / 15.0) ** -1.5
    return out if out.ndim else float(out)


def ground_state_prime(r):
    """Radial derivative W'(r) = -(r/5)(1 + r^2/15)^(-5/2), in closed form."""
    r = np.asarray(r, dtype=float)
    out = -(r / 5.0) * (1.0 + r * r / 15.0) ** -2.5
    return out if out.ndim else float(out)


def ground_state_second(r):
    """W''(r) = -(1/5)(1 + r^2/15)^(-5/2) + (r^2/15)(1 + r^2/15)^(-7/2)."""
    r = np.asarray(r, dtype=float)
    q = 1.0 + r * r / 15.0
    out = -0.2 * q**-2.5 + (r * r / 15.0) * q**-3.5
    return out if out.ndim else float(out)


def lambda_w(r):
    """LW(r) = (3/2) W(r) + r W'(r), the scaling generator applied to W."""
    r = np.asarray(r, dtype=float)
    out = 1.5 * ground_state(r) + r * ground_state_prime(r)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class QuadratureSpec:
    """Panel quadrature description for the two radial integrals.

    tail_order selects how many terms of the power-law expansion of the
    integrands are integrated analytically beyond r_max (1 = leading term,
    2 = leading + first correction).
    """

    r_max: float = 200.0
    n_panels: int = 2048
    rule: str = "gauss-legendre"
    tail_order: int = 2

    def __post_init__(self):
        if not self.r_max >= 10.0:
            raise InvalidInput(f"r_max must be >= 10, got {self.r_max}")
        if not self.n_panels >= 16:
            raise InvalidInput(f"n_panels must be >= 16, got {self.n_panels}")
        if self.rule not in RULES:
            raise InvalidInput(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.tail_order not in (1, 2):
            raise InvalidInput(f"tail_order must be 1 or 2, got {self.tail_order}")


@dataclass(frozen=True)
class KappaReport:
    """Quadrature vs closed-form comparison for the interaction constant."""

    integral_w73: float     # int_{R^5} W^(7/3) dx
    norm_lw_sq: float       # ||LW||_L2^2 over R^5
    kappa_quadrature: float
    kappa_closed: float
    rel_error: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "integral_w73": self.integral_w73,
                "norm_lw_sq": self.norm_lw_sq,
                "kappa_quadrature": self.kappa_quadrature,
                "kappa_closed": self.kappa_closed,
                "rel_error": self.rel_error,
            },
            indent=2,
            sort_keys=True,
        )


def _integrand_w73(r):
    return r**4 * ground_state(r) ** (7.0 / 3.0)


def _integrand_lw_sq(r):
    return r**4 * lambda_w(r) ** 2


def _panel_integral(f, r_max: float, n_panels: int, rule: str) -> float:
    edges = np.linspace(0.0, r_max, n_panels + 1)
    if rule == "gauss-legendre":
        nodes, weights = leggauss(GL_NODES_PER_PANEL)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        pts = mid[:, None] + half * nodes[None, :]
        return float(half * np.sum(f(pts) @ weights))
    # composite Simpson: each panel split at its midpoint
    h = edges[1] - edges[0]
    mids = 0.5 * (edges[:-1] + edges[1:])
    fe = f(edges)
    fm = f(mids)
    return float(h / 6.0 * (fe[0] + fe[-1] + 2.0 * np.sum(fe[1:-1]) + 4.0 * np.sum(fm)))


def _tail_w73(r_max: float, order: int) -> float:
    # r^4 W^(7/3) = 15^(7/2) (r^-3 - (105/2) r^-5 + ...)
    t = 15.0**3.5 / (2.0 * r_max**2)
    if order >= 2:
        t -= 15.0**3.5 * 105.0 / (8.0 * r_max**4)
    return t


def _tail_lw_sq(r_max: float, order: int) -> float:
    # r^4 (LW)^2 = 15^5 ((1/100) r^-2 - (21/20) r^-4 + ...)
    t = 15.0**5 / (100.0 * r_max)
    if order >= 2:
        t -= 15.0**5 * 7.0 / (20.0 * r_max**3)
    return t


def _refinement_failed(coarse: float, mid: float, fine: float) -> bool:
    """True when the two-level error estimate grew under panel halving.

    Estimates below a relative floor are indistinguishable from round-off and
    never count as divergence.
    """
    est_prev = abs(mid - coarse)
    est = abs(fine - mid)
    floor = 1e-13 * (abs(fine) + 1.0)
    return est > max(est_prev, floor)


def verify_kappa(spec: QuadratureSpec = QuadratureSpec()) -> KappaReport:
    """Compute both 5-D radial integrals and compare kappa against the closed form.

    Raises QuadratureDiverged when halving the panel width fails to reduce the
    estimated quadrature error for either integrand.
    """
    for f, name in ((_integrand_w73, "W^(7/3)"), (_integrand_lw_sq, "(LW)^2")):
        coarse, mid, fine = (
            _panel_integral(f, spec.r_max, n, spec.rule)
            for n in (spec.n_panels // 4, spec.n_panels // 2, spec.n_panels)
        )
        if _refinement_failed(coarse, mid, fine):
            raise QuadratureDiverged(
                f"{name}: error estimate grew under refinement "
                f"({abs(mid - coarse):.3e} -> {abs(fine - mid):.3e}); check r_max/n_panels"
            )

    i_w73 = OMEGA4 * (
        _panel_integral(_integrand_w73, spec.r_max, spec.n_panels, spec.rule)
        + _tail_w73(spec.r_max, spec.tail_order)
    )
    i_lw = OMEGA4 * (
        _panel_integral(_integrand_lw_sq, spec.r_max, spec.n_panels, spec.rule)
        + _tail_lw_sq(spec.r_max, spec.tail_order)
    )
    kq = 1.5 * 15.0**1.5 * i_w73 / i_lw
    kc = kappa_closed_form()
    return KappaReport(
        integral_w73=i_w73,
        norm_lw_sq=i_lw,
        kappa_quadrature=kq,
        kappa_closed=kc,
        rel_error=abs(kq - kc) / kc,
    )
