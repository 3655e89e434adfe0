"""Solves with ``B_k + sigma I`` and ``B_k + D`` using only inner products.

Write ``B_k + shift = C_0 + E_0 + ... + E_{2k-1}`` with ``C_0 = B_0 + shift``,
``E_{2i} = -a_i a_i^T`` and ``E_{2i+1} = b_i b_i^T``.  Applying the rank-one
Sherman-Morrison formula term by term gives

    C_{j+1}^{-1} z = C_0^{-1} z + sum_{i<=j} (-1)^i v_i (p_i^T z) p_i

with ``p_j = C_j^{-1} c_j`` (``c_j`` being ``a_{j/2}`` or ``b_{(j-1)/2}``)
and ``v_j = 1 / (1 -+ p_j^T c_j)``.  The vectors ``p_j`` only depend on the
matrix and the shift, so :func:`build` computes them once and
:meth:`ShiftedSolver.solve` then costs 2k inner products, 2k axpys and one
entrywise scaling per right-hand side.

Well-definedness needs ``gamma * shift > epsilon``: it keeps
``a_0^T C_0^{-1} a_0 = 1 / (1 + gamma sigma)`` away from 1 and makes every
partial sum ``C_j`` positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, InvalidArgumentError, ShiftTooSmallError
from .lbfgs_core import LbfgsMatrix, UpdateVectors, as_vector

# Below gamma * sigma ~ 1e-8 the odd partial sums are so close to singular that
# rounding can flip the sign of 1 - p^T a; solve error grows like eps / (gamma sigma).
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class Shift:
    """A positive scalar ``sigma`` or a positive diagonal ``d``.

    Build with :meth:`scalar` or :meth:`diagonal`; exactly one field is set.
    """

    sigma: float | None = None
    diag: np.ndarray | None = None

    @classmethod
    def scalar(cls, sigma: float) -> Shift:
        sigma = float(sigma)
        if not np.isfinite(sigma) or sigma <= 0.0:
            raise InvalidArgumentError(f"sigma must be positive, got {sigma!r}")
        return cls(sigma=sigma)

    @classmethod
    def diagonal(cls, d) -> Shift:
        d = as_vector(d, name="d").copy()
        if d.size == 0 or not np.all(d > 0.0):
            raise InvalidArgumentError("diagonal shift entries must all be positive")
        d.flags.writeable = False
        return cls(diag=d)

    @property
    def is_scalar(self) -> bool:
        return self.diag is None

    @property
    def floor(self) -> float:
        """Lower bound on the shift entries (``sigma`` or ``min d_ii``)."""
        return self.sigma if self.is_scalar else float(self.diag.min())

    def check_dim(self, n: int) -> None:
        if not self.is_scalar and self.diag.shape[0] != n:
            raise InvalidArgumentError(
                f"diagonal shift has length {self.diag.shape[0]}, expected {n}")

    def base_inverse(self, gamma: float):
        """Entrywise ``(1/gamma + shift)^{-1}``: a float, or an array for a diagonal."""
        if self.is_scalar:
            return 1.0 / (1.0 / gamma + self.sigma)
        return 1.0 / (1.0 / gamma + self.diag)

    def apply(self, z: np.ndarray) -> np.ndarray:
        return (self.sigma if self.is_scalar else self.diag) * z


def as_shift(shift) -> Shift:
    """Coerce a number to a scalar shift and an array to a diagonal one."""
    if isinstance(shift, Shift):
        return shift
    if np.ndim(shift) == 0:
        return Shift.scalar(shift)
    return Shift.diagonal(shift)


class InnerProductCounter:
    """Tally of inner products and shifted solves, passed into ``solve``."""

    def __init__(self):
        self.inner_products = 0
        self.solves = 0

    def __repr__(self):
        return f"InnerProductCounter(inner_products={self.inner_products}, solves={self.solves})"


class ShiftedSolver:
    """Precomputed recursion for one (matrix, shift) combination.

    Immutable once built.  Use :func:`build` or :func:`build_diagonal`
    rather than calling the constructor.

    Attributes
    ----------
    shift : Shift
    gamma : float
        Scaling of ``B_0`` copied from the source matrix.
    p : ndarray, shape (2k, n)
        Rows ``p_j = C_j^{-1} c_j``.
    v : ndarray, shape (2k,)
        Sherman-Morrison scalars, all positive.
    build_inner_products : int
        Inner products spent while building.
    """

    def __init__(self, shift: Shift, gamma: float, p: np.ndarray, v: np.ndarray,
                 base_inverse, build_inner_products: int):
        self.shift = shift
        self.gamma = gamma
        self.p = p
        self.v = v
        self.base_inverse = base_inverse
        self.build_inner_products = build_inner_products
        self._weights = v * np.where(np.arange(v.size) % 2 == 0, 1.0, -1.0)
        for arr in (self.p, self.v, self._weights):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.p.shape[1]

    @property
    def num_terms(self) -> int:
        return self.v.size

    @property
    def solve_inner_products(self) -> int:
        # the C_0^{-1} scaling pass is tallied as one vector-vector product
        return self.num_terms + 1

    def inner_product_count(self) -> int:
        """Inner products for building plus one solve: ``2k^2 + 3k + 1``."""
        return self.build_inner_products + self.solve_inner_products

    def solve(self, z, terms: int | None = None,
              counter: InnerProductCounter | None = None) -> np.ndarray:
        """Return ``x`` with ``(B_k + shift) x = z``.

        ``terms`` truncates the sum after ``terms`` rank-one corrections, so
        ``solve(z, terms=j)`` returns ``C_j^{-1} z``.
        """
        z = as_vector(z, self.dim, "z")
        t = self.num_terms if terms is None else int(terms)
        if not 0 <= t <= self.num_terms:
            raise InvalidArgumentError(f"terms must lie in [0, {self.num_terms}], got {terms}")
        x = self.base_inverse * z
        if t:
            coef = self.p[:t] @ z
            x += (self._weights[:t] * coef) @ self.p[:t]
        if counter is not None:
            counter.inner_products += t + 1
            counter.solves += 1
        return x


def build(m: LbfgsMatrix, shift, *, uv: UpdateVectors | None = None,
          epsilon: float = DEFAULT_EPSILON) -> ShiftedSolver:
    """Precompute ``p_j`` and ``v_j`` for ``(B_k + shift)^{-1}``.

    Parameters
    ----------
    m : LbfgsMatrix
    shift : Shift, float or array_like
        Scalar ``sigma > 0`` or positive diagonal ``d``.
    uv : UpdateVectors, optional
        Must match the current state of ``m``; taken from ``m`` if omitted.
    epsilon : float
        Refuse to build unless ``gamma * min(shift) > epsilon``.

    Raises
    ------
    ShiftTooSmallError
        If ``gamma * min(shift) <= epsilon``.
    ConsistencyError
        If some ``v_j`` comes out nonpositive (numerical breakdown).
    """
    shift = as_shift(shift)
    shift.check_dim(m.dim)
    uv = m.check_current(uv)
    gamma = m.gamma
    if not gamma * shift.floor > epsilon:
        raise ShiftTooSmallError(
            f"gamma * shift = {gamma * shift.floor:.3e} does not exceed epsilon = {epsilon:.3e}")

    c0 = shift.base_inverse(gamma)
    nt = 2 * uv.count
    p = np.empty((nt, m.dim))
    v = np.empty(nt)
    weights = np.empty(nt)
    count = 0
    for j in range(nt):
        even = j % 2 == 0
        c = uv.a[j // 2] if even else uv.b[j // 2]
        pj = c0 * c
        if j:
            coef = p[:j] @ c
            count += j
            pj += (weights[:j] * coef) @ p[:j]
        p[j] = pj
        pc = float(np.dot(pj, c))
        count += 1
        denom = 1.0 - pc if even else 1.0 + pc
        if not denom > 0.0:
            raise ConsistencyError(f"v_{j} denominator {denom:.3e} is not positive")
        v[j] = 1.0 / denom
        weights[j] = v[j] if even else -v[j]
    return ShiftedSolver(shift, gamma, p, v, c0, count)


def build_diagonal(m: LbfgsMatrix, d, *, uv: UpdateVectors | None = None,
                   epsilon: float = DEFAULT_EPSILON) -> ShiftedSolver:
    """:func:`build` for ``B_k + diag(d)``; every ``d_i`` must be positive."""
    return build(m, Shift.diagonal(d), uv=uv, epsilon=epsilon)


def solve(sv: ShiftedSolver, z) -> np.ndarray:
    return sv.solve(z)
