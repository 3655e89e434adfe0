"""Inverse of the doubly-augmented preconditioner built on an L-BFGS ``B``.

With ``K = B + lam I``, a vector ``x`` and a scalar ``d > 0`` the
preconditioner is

    P = [[K + (2/d) x x^T, -x],
         [-x^T,             d]]

For ``d = 1`` this is the familiar ``K + 2 x x^T`` form.  ``P u = y`` has
the same solution as the bordered system

    [[K,   x],   u = [y1 + (2/d) y2 x,
     [x^T, -d]]       -y2           ]

which is solved by block elimination on the scalar Schur complement
``x^T K^{-1} x + d``.  ``w = K^{-1} x`` and that complement are cached, so
each application costs one shifted solve.

For small ``d`` the mapped right-hand side carries a ``1/d`` factor that
cancels again inside ``x1``.  :meth:`AugmentedSystem.apply_P_inverse`
eliminates it in closed form: with ``u = K^{-1} y1`` and ``t = x^T u``,

    x1 = u + w (y2 - t) / denom
    x2 = (t + y2 + 2 y2 x^T w / d) / denom

which is algebraically identical but keeps ``x1`` free of ``1/d``.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError, NearSingularError
from .lbfgs_core import LbfgsMatrix, UpdateVectors, as_vector
from .shifted_solve import DEFAULT_EPSILON, InnerProductCounter, ShiftedSolver, build
from .baselines import DEFAULT_DENSE_LIMIT, dense_assemble


class AugmentedSystem:
    """Cached state for repeated preconditioner applications."""

    def __init__(self, solver: ShiftedSolver, x_vec: np.ndarray, lam: float, d: float):
        self.solver = solver
        self.x_vec = x_vec
        self.lam = lam
        self.d = d
        self.w = solver.solve(x_vec)
        self.xw = float(np.dot(x_vec, self.w))
        self.denom = self.xw + d
        if not self.denom > 1e-14 * (1.0 + d):
            raise NearSingularError(f"Schur complement {self.denom:.3e} is numerically zero")

    @property
    def dim(self) -> int:
        return self.solver.dim

    def solve_equivalent(self, r1, r2: float,
                         counter: InnerProductCounter | None = None) -> tuple[np.ndarray, float]:
        """Solve ``[[B + lam I, x], [x^T, -d]] (x1, x2) = (r1, r2)``."""
        r1 = as_vector(r1, self.dim, "r1")
        u = self.solver.solve(r1, counter=counter)
        x2 = (float(np.dot(self.x_vec, u)) - float(r2)) / self.denom
        if counter is not None:
            counter.inner_products += 1
        return u - x2 * self.w, x2

    def apply_P_inverse(self, y1, y2: float,
                        counter: InnerProductCounter | None = None) -> tuple[np.ndarray, float]:
        """Return ``(x1, x2) = P^{-1} (y1, y2)``."""
        y1 = as_vector(y1, self.dim, "y1")
        y2 = float(y2)
        u = self.solver.solve(y1, counter=counter)
        t = float(np.dot(self.x_vec, u))
        if counter is not None:
            counter.inner_products += 1
        x1 = u + ((y2 - t) / self.denom) * self.w
        x2 = (t + y2 + 2.0 * y2 * self.xw / self.d) / self.denom
        return x1, x2


def build_augmented(m: LbfgsMatrix, x_vec, lam: float, d: float, *,
                    uv: UpdateVectors | None = None,
                    epsilon: float = DEFAULT_EPSILON) -> AugmentedSystem:
    """Build the ``lam``-shifted solver and cache ``w`` and the Schur complement.

    ``d`` is typically ``c(x) / lam`` from a barrier method; it is taken as
    given.
    """
    x_vec = as_vector(x_vec, m.dim, "x_vec")
    d = float(d)
    if not d > 0:
        raise InvalidArgumentError(f"d must be positive, got {d!r}")
    solver = build(m, lam, uv=uv, epsilon=epsilon)
    return AugmentedSystem(solver, x_vec, float(lam), d)


def apply_P_inverse(a: AugmentedSystem, y1, y2: float):
    return a.apply_P_inverse(y1, y2)


def solve_equivalent(a: AugmentedSystem, r1, r2: float):
    return a.solve_equivalent(r1, r2)


def dense_preconditioner(m: LbfgsMatrix, x_vec, lam: float, d: float, *,
                         uv: UpdateVectors | None = None,
                         dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Dense ``(n+1) x (n+1)`` matrix ``P`` for checking."""
    x_vec = as_vector(x_vec, m.dim, "x_vec")
    n = m.dim
    P = np.empty((n + 1, n + 1))
    P[:n, :n] = dense_assemble(m, lam, uv=uv, dense_limit=dense_limit)
    P[:n, :n] += (2.0 / d) * np.outer(x_vec, x_vec)
    P[:n, n] = P[n, :n] = -x_vec
    P[n, n] = d
    return P


def dense_bordered(m: LbfgsMatrix, x_vec, lam: float, d: float, *,
                   uv: UpdateVectors | None = None,
                   dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """Dense ``[[B + lam I, x], [x^T, -d]]`` for checking."""
    x_vec = as_vector(x_vec, m.dim, "x_vec")
    n = m.dim
    K = np.empty((n + 1, n + 1))
    K[:n, :n] = dense_assemble(m, lam, uv=uv, dense_limit=dense_limit)
    K[:n, n] = K[n, :n] = x_vec
    K[n, n] = -d
    return K
