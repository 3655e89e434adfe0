"""Two-norm trust-region subproblem with an L-BFGS model Hessian.

Minimizes ``g^T s + s^T B s / 2`` subject to ``|s| <= delta`` with the
More-Sorensen multiplier iteration.  Each Cholesky solve of the classical
method becomes a shifted recursion solve, and the quantity ``|q|^2`` with
``q = R^{-T} p`` becomes ``p^T (B + sigma I)^{-1} p``, one extra solve with
the same precomputed solver.  The first multiplier is a Newton step taken
from ``sigma = 0`` with two-loop products, since the recursion is
inaccurate for ``gamma * sigma`` near zero.  When the KKT residual misses
``tol`` one step of iterative refinement is applied.

``B`` is positive definite, so the hard case cannot arise: whenever the
Newton step leaves the ball the multiplier is strictly positive and
``|p(sigma)|`` decreases strictly on ``sigma >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, InvalidArgumentError, NonConvergenceError
from .lbfgs_core import LbfgsMatrix, UpdateVectors, as_vector
from .shifted_solve import DEFAULT_EPSILON, build

BOUNDARY_TOL = 1e-8


@dataclass
class TrSolution:
    step: np.ndarray
    multiplier: float
    iterations: int
    on_boundary: bool
    # (sigma, |p(sigma)|) for every multiplier tried, in order
    history: list = field(default_factory=list)


def model_value(m: LbfgsMatrix, g, s, uv: UpdateVectors | None = None) -> float:
    """Quadratic model ``g^T s + s^T B s / 2``."""
    return float(np.dot(g, s) + 0.5 * np.dot(s, m.apply_B(s, uv)))


def solve_subproblem(m: LbfgsMatrix, g, delta: float, tol: float = 1e-10, maxit: int = 50, *,
                     uv: UpdateVectors | None = None, epsilon: float = DEFAULT_EPSILON,
                     boundary_tol: float = BOUNDARY_TOL) -> TrSolution:
    """Globally solve the trust-region subproblem.

    Parameters
    ----------
    m : LbfgsMatrix
        Model Hessian ``B``.
    g : array_like
        Model gradient.
    delta : float
        Trust-region radius.
    tol : float
        Returned solutions satisfy ``|(B + sigma I) s + g| <= tol |g|`` and
        ``|sigma (delta - |s|)| <= tol * delta * max(1, sigma)``.
    maxit : int
        Maximum number of multiplier updates.
    epsilon : float
        Well-definedness margin passed to the shifted solver; multipliers
        are kept above ``1.01 * epsilon / gamma``.  A subproblem whose
        optimal multiplier lies below that floor is solved approximately:
        the returned step sits just inside the ball and complementarity
        holds to ``tol``.

    Returns
    -------
    TrSolution

    Raises
    ------
    NonConvergenceError
        After ``maxit`` multipliers; ``best`` holds the last TrSolution.
    """
    g = as_vector(g, m.dim, "g")
    if not delta > 0:
        raise InvalidArgumentError(f"delta must be positive, got {delta!r}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol!r}")
    uv = m.check_current(uv)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return TrSolution(np.zeros(m.dim), 0.0, 0, False)

    s = -m.apply_Binv(g)
    if np.linalg.norm(s) <= delta:
        return TrSolution(s, 0.0, 0, False)

    # first Newton step from sigma = 0, where B^{-1} comes from the two-loop recursion
    sigma_min = 1.01 * epsilon / m.gamma
    pnorm = float(np.linalg.norm(s))
    history = [(0.0, pnorm)]
    p = s
    lo, hi = 0.0, math.inf
    sigma = pnorm * pnorm / float(np.dot(s, m.apply_Binv(s))) * (pnorm - delta) / delta
    for it in range(1, maxit + 1):
        sigma = max(sigma, sigma_min)
        try:
            sv = build(m, sigma, uv=uv, epsilon=epsilon)
        except ConsistencyError:
            # recursion broke down this close to the floor; retreat upward
            sigma_min = 10.0 * sigma
            continue
        p = -sv.solve(g)
        residual = m.apply_B(p, uv) + sigma * p + g
        kkt = float(np.linalg.norm(residual))
        if kkt > tol * gnorm:
            p = p - sv.solve(residual)
            residual = m.apply_B(p, uv) + sigma * p + g
            kkt = float(np.linalg.norm(residual))
        pnorm = float(np.linalg.norm(p))
        history.append((sigma, pnorm))

        gap = pnorm - delta
        if (kkt <= tol * gnorm and abs(sigma * gap) <= tol * delta * max(1.0, sigma)
                and gap <= boundary_tol * delta):
            return TrSolution(p, sigma, it, abs(gap) <= boundary_tol * delta, history)

        if gap > 0:
            lo = max(lo, sigma)
        else:
            hi = min(hi, sigma)
        qq = float(np.dot(p, sv.solve(p)))
        trial = sigma + (pnorm * pnorm / qq) * gap / delta
        if not lo < trial <= hi:
            trial = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(sigma, lo)
        sigma = trial

    raise NonConvergenceError(
        f"trust-region multiplier did not converge in {maxit} iterations",
        best=TrSolution(p, sigma, maxit, False, history))
