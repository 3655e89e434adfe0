"""Reference solvers: dense assembly + Cholesky, and matrix-free CG.

These are what the recursion is checked and benchmarked against.  CG is
written out by hand so that its vector-vector products can be counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import DenseLimitError, InvalidArgumentError, NotPositiveDefiniteError
from .lbfgs_core import LbfgsMatrix, UpdateVectors, as_vector
from .shifted_solve import as_shift

DEFAULT_DENSE_LIMIT = 5000


def dense_assemble(m: LbfgsMatrix, shift=None, *, uv: UpdateVectors | None = None,
                   dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Materialize ``B_k + shift`` as an exactly symmetric ``n x n`` array.

    ``shift`` may be None (plain ``B_k``), a scalar, an array of diagonal
    entries or a :class:`Shift`.
    """
    n = m.dim
    if n > dense_limit:
        raise DenseLimitError(f"n = {n} exceeds the dense limit {dense_limit}")
    uv = m.check_current(uv)
    full = uv.b.T @ uv.b - uv.a.T @ uv.a
    diag = np.full(n, 1.0 / m.gamma)
    if shift is not None:
        shift = as_shift(shift)
        shift.check_dim(n)
        diag = diag + (shift.sigma if shift.is_scalar else shift.diag)
    full[np.diag_indices(n)] += diag
    upper = np.triu(full)
    return upper + np.triu(upper, 1).T


def direct_solve(A, z) -> np.ndarray:
    """Solve the SPD system ``A x = z`` by Cholesky factorization."""
    A = np.asarray(A, dtype=np.float64)
    z = as_vector(z, A.shape[0], "z")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"A must be square, got shape {A.shape}")
    try:
        factor = scipy.linalg.cho_factor(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    return scipy.linalg.cho_solve(factor, z)


@dataclass
class CgReport:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    stagnated: bool
    converged: bool
    inner_products: int


def shifted_operator(m: LbfgsMatrix, shift, uv: UpdateVectors | None = None):
    """Return ``u -> (B_k + shift) u`` as a callable."""
    shift = as_shift(shift)
    shift.check_dim(m.dim)
    uv = m.check_current(uv)
    return lambda u: m.apply_B(u, uv) + shift.apply(u)


def cg_solve(m: LbfgsMatrix, shift, z, tol: float = 1e-10, maxit: int | None = None, *,
             uv: UpdateVectors | None = None, stall_window: int = 5,
             stall_factor: float = 1e-16) -> CgReport:
    """Conjugate gradients on ``(B_k + shift) x = z`` from a zero start.

    The loop stops on the updated residual; a candidate is then accepted
    only if the true residual ``|z - A x| / |z|`` also meets ``tol``,
    otherwise CG restarts from the true residual.  An iteration counts as
    stalled when the updated residual drops by less than ``stall_factor``
    relative to its previous value, or when the step is below
    ``stall_factor * |x|`` (the iterate, hence the true residual, no longer
    moves).  ``stall_window`` consecutive stalls flag the run as stagnated.

    ``inner_products`` counts the 2k + 2 vector-vector products of each
    iteration plus the initial ``r^T r``; true-residual checks are excluded.
    The reported ``relative_residual`` is always the true one.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol!r}")
    n = m.dim
    z = as_vector(z, n, "z")
    if maxit is None:
        maxit = 10 * n
    if maxit < 1:
        raise InvalidArgumentError(f"maxit must be at least 1, got {maxit!r}")
    op = shifted_operator(m, shift, uv)
    znorm = float(np.linalg.norm(z))
    if znorm == 0.0:
        return CgReport(np.zeros(n), 0, 0.0, False, True, 0)

    per_matvec = 2 * m.count
    x = np.zeros(n)
    r = z.copy()
    p = r.copy()
    rr = float(np.dot(r, r))
    ips = 1
    rel = np.sqrt(rr) / znorm
    it = 0
    stall = 0
    converged = stagnated = False
    while True:
        if rel <= tol:
            true_r = z - op(x)
            true_rel = float(np.linalg.norm(true_r)) / znorm
            if true_rel <= tol:
                converged = True
                break
            r = true_r
            p = r.copy()
            rr = float(np.dot(r, r))
            rel = true_rel
            stall += 1
            if stall >= stall_window:
                stagnated = True
                break
        if it >= maxit:
            break
        ap = op(p)
        alpha = rr / float(np.dot(p, ap))
        step = alpha * p
        x += step
        r -= alpha * ap
        rr_new = float(np.dot(r, r))
        ips += per_matvec + 2
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
        new_rel = np.sqrt(rr) / znorm
        stuck = (rel - new_rel < stall_factor * rel
                 or np.linalg.norm(step) < stall_factor * np.linalg.norm(x))
        stall = stall + 1 if stuck else 0
        rel = new_rel
        if stall >= stall_window:
            stagnated = True
            break

    true_rel = float(np.linalg.norm(z - op(x))) / znorm
    if true_rel <= tol:
        converged, stagnated = True, False
    return CgReport(x, it, true_rel, stagnated, converged, ips)


def secular_oracle(H, g, delta: float) -> float:
    """Trust-region multiplier for a dense SPD ``H`` via eigendecomposition.

    Returns 0 when the Newton step fits inside the radius; otherwise the
    root of ``|(H + sigma I)^{-1} g| = delta`` found by Brent's method on
    ``1/delta - 1/|p(sigma)|``.
    """
    lam, q = np.linalg.eigh(np.asarray(H, dtype=np.float64))
    beta = q.T @ np.asarray(g, dtype=np.float64)
    if lam[0] <= 0:
        raise NotPositiveDefiniteError(f"smallest eigenvalue {lam[0]:.3e} is not positive")

    def pnorm(sigma):
        return np.sqrt(np.sum((beta / (lam + sigma)) ** 2))

    if pnorm(0.0) <= delta:
        return 0.0
    hi = np.linalg.norm(beta) / delta
    return brentq(lambda s: 1.0 / delta - 1.0 / pnorm(s), 0.0, hi,
                  xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def relative_residual(m: LbfgsMatrix, shift, x, z, uv: UpdateVectors | None = None) -> float:
    """``|(B_k + shift) x - z| / |z|`` evaluated matrix-free."""
    z = as_vector(z, m.dim, "z")
    r = shifted_operator(m, shift, uv)(as_vector(x, m.dim, "x")) - z
    zn = np.linalg.norm(z)
    return float(np.linalg.norm(r) / zn) if zn else float(np.linalg.norm(r))
