"""Positive solutions of the reduced interaction system and isolation certificates.

The reduced system in x_k = sqrt(a_k) reads

    6 x_k = sum_{j != k} m[j][k] * x_j^3,      x_k > 0,

whose solutions lift to equilibrium pairs (a, c) = (x^2, 2 x^2).  At a
solution, conjugating the Jacobian by diag(x) yields 6I - A with the
symmetric matrix A_ij = 3 m_ij x_i x_j; A always carries the eigenvalue 18
with eigenvector x^2, and a solution is isolated exactly when det(6I - A)
stays away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import InteractionMatrix
from .errors import InvalidInput, NumericalFailure

__all__ = [
    "ReducedSolution",
    "EquilibriumPoint",
    "IsolationReport",
    "SolverOptions",
    "NonPositiveComponent",
    "NonPositiveDistance",
    "SpectrumFailure",
    "NoSolutionFound",
    "reduced_residual",
    "reduced_jacobian",
    "symmetrized_matrix",
    "isolation_check",
    "solve_equilibria",
    "lift",
    "k2_closed_form",
]


class NonPositiveComponent(InvalidInput):
    """An operation requiring x > 0 received a non-positive component."""


class NonPositiveDistance(InvalidInput):
    """Closed-form solution requested for a non-positive separation."""


class SpectrumFailure(NumericalFailure):
    """The symmetric eigensolver did not converge (defective numerical input)."""


class NoSolutionFound(NumericalFailure):
    """Every Newton start failed; no positive solution was located."""


@dataclass(frozen=True)
class ReducedSolution:
    """A positive solution x of the reduced system, with its residual."""

    x: np.ndarray
    residual_norm: float
    tolerance: float  # absolute acceptance threshold the residual met

    @property
    def K(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class EquilibriumPoint:
    """Lifted equilibrium (a, c) with c = 2a entrywise."""

    a: np.ndarray
    c: np.ndarray

    @property
    def K(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class IsolationReport:
    """Spectrum of the symmetrized matrix A and the det(6I - A) certificate."""

    a_matrix: np.ndarray
    eigenvalues: np.ndarray  # sorted ascending
    det_shift: float         # det(6I - A)
    eig18_residual: float    # ||A u - 18 u|| / ||u||, u = x^2
    isolated: bool
    sign_pattern: str        # one character per eigenvalue: '-', '0' or '+'


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-12            # residual max-norm <= tol * (1 + ||6x||_inf)
    dedup_radius: float = 1e-6    # max-norm dedup distance on x
    n_random: int = 64            # log-uniform random starts around the symmetric seed
    seed: int = 0
    max_iter: int = 200
    seed_span: tuple[float, float] = (1e-2, 1e2)
    extra_seeds: tuple = ()       # user-supplied start vectors


def reduced_residual(x, m: InteractionMatrix) -> np.ndarray:
    """Component k of 6 x_k - sum_{j != k} m[j][k] x_j^3.

    Evaluated for any finite x (cubes are odd), so Newton line searches may
    probe outside the positive orthant; solutions themselves are filtered to
    x > 0 by the solver.
    """
    x = np.asarray(x, dtype=float)
    return 6.0 * x - m.m @ x**3


def reduced_jacobian(x, m: InteractionMatrix) -> np.ndarray:
    """Jacobian of the reduced residual: 6 on the diagonal, -3 m[k][l] x_l^2 off it."""
    x = np.asarray(x, dtype=float)
    return 6.0 * np.eye(x.shape[0]) - 3.0 * m.m * x[None, :] ** 2


def symmetrized_matrix(x, m: InteractionMatrix) -> np.ndarray:
    """A with A_ij = 3 m_ij x_i x_j (zero diagonal); requires x > 0 entrywise."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveComponent(f"x must be entrywise positive, got min {x.min()}")
    return 3.0 * m.m * np.outer(x, x)


def isolation_check(sol: ReducedSolution, m: InteractionMatrix) -> IsolationReport:
    """Certify (non-)isolation of a solution through the spectrum of A.

    isolated is true iff |det(6I - A)| > 1e-8 * 6^K, a threshold scaled to
    the natural magnitude of det(6I).
    """
    if not sol.residual_norm <= 1e-8:
        raise InvalidInput(
            f"isolation_check needs residual_norm <= 1e-8, got {sol.residual_norm:.3e}"
        )
    a = symmetrized_matrix(sol.x, m)
    try:
        eigs = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as e:
        raise SpectrumFailure(f"symmetric eigensolver failed: {e}") from e
    k = sol.K
    det_shift = float(np.prod(6.0 - eigs))
    u = sol.x**2
    eig18 = float(np.linalg.norm(a @ u - 18.0 * u) / np.linalg.norm(u))
    scale = float(np.max(np.abs(eigs))) if k else 0.0
    pattern = "".join(
        "0" if abs(e) <= 1e-10 * max(scale, 1.0) else ("-" if e < 0 else "+") for e in eigs
    )
    return IsolationReport(
        a_matrix=a,
        eigenvalues=eigs,
        det_shift=det_shift,
        eig18_residual=eig18,
        isolated=bool(abs(det_shift) > 1e-8 * 6.0**k),
        sign_pattern=pattern,
    )


def _newton(x0: np.ndarray, m: InteractionMatrix, opts: SolverOptions):
    """Damped Newton with positivity-preserving backtracking; None on failure."""
    x = x0.copy()
    for _ in range(opts.max_iter):
        f = reduced_residual(x, m)
        nf = float(np.max(np.abs(f)))
        thresh = opts.tol * (1.0 + float(np.max(np.abs(6.0 * x))))
        if nf <= thresh:
            return x, nf, thresh
        # least-squares step stays bounded when J is near-singular
        # (non-isolated solution manifolds)
        step = np.linalg.lstsq(reduced_jacobian(x, m), -f, rcond=None)[0]
        f2 = float(f @ f)
        lam = 1.0
        for _ in range(40):
            xn = x + lam * step
            if np.all(xn > 0):
                fn = reduced_residual(xn, m)
                if float(fn @ fn) < f2:
                    x = xn
                    break
            lam *= 0.5
        else:
            return None
    return None


def solve_equilibria(m: InteractionMatrix, options: SolverOptions = SolverOptions()):
    """Multistart damped Newton for positive solutions of the reduced system.

    Starts from a symmetric seed (exact for equal-distance configurations),
    options.n_random log-uniform perturbations of it, and any user seeds.
    Converged positive solutions are sorted lexicographically and
    deduplicated within options.dedup_radius in max-norm.
    """
    k = m.K
    mean_row = float(np.mean(np.sum(m.m, axis=1)))
    xbar = np.sqrt(6.0 / mean_row)
    seeds = [np.full(k, xbar)]
    rng = np.random.default_rng(options.seed)
    lo, hi = np.log(options.seed_span[0]), np.log(options.seed_span[1])
    for _ in range(options.n_random):
        seeds.append(xbar * np.exp(rng.uniform(lo, hi, size=k)))
    for s in options.extra_seeds:
        s = np.asarray(s, dtype=float)
        if s.shape != (k,) or np.any(s <= 0):
            raise InvalidInput(f"extra seed must be a positive vector of length {k}")
        seeds.append(s)

    # any genuine solution satisfies 6 max(x) <= max_rowsum * max(x)^3, so
    # max(x) >= sqrt(6 / max_rowsum); Newton runs that collapse toward the
    # trivial zero solution fall below this floor and are discarded
    floor = 0.5 * np.sqrt(6.0 / float(np.max(np.sum(m.m, axis=1))))
    hits = []
    for s in seeds:
        res = _newton(s, m, options)
        if res is not None and float(np.max(res[0])) >= floor:
            hits.append(res)
    if not hits:
        raise NoSolutionFound(f"no positive solution from {len(seeds)} starts")

    hits.sort(key=lambda h: tuple(h[0]))
    kept: list[ReducedSolution] = []
    for x, nf, thresh in hits:
        if any(np.max(np.abs(x - p.x)) < options.dedup_radius for p in kept):
            continue
        x = x.copy()
        x.setflags(write=False)
        kept.append(ReducedSolution(x=x, residual_norm=nf, tolerance=thresh))
    return kept


def lift(sol: ReducedSolution) -> EquilibriumPoint:
    """Lift x to the equilibrium pair a = x^2, c = 2a."""
    a = sol.x**2
    c = 2.0 * a
    a.setflags(write=False)
    c.setflags(write=False)
    return EquilibriumPoint(a=a, c=c)


def k2_closed_form(distance: float, kappa: float) -> EquilibriumPoint:
    """The unique two-bubble equilibrium: a = (6 d^3 / kappa) * (1, 1), c = 2a."""
    if not distance > 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance}")
    if not kappa > 0:
        raise InvalidInput(f"kappa must be positive, got {kappa}")
    a = np.full(2, 6.0 * distance**3 / kappa)
    c = 2.0 * a
    a.setflags(write=False)
    c.setflags(write=False)
    return EquilibriumPoint(a=a, c=c)
