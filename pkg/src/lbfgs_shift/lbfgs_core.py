"""Limited-memory BFGS matrices stored as (s, y) pairs.

The matrix is never formed.  With ``B_0 = I / gamma`` the current
approximation is the rank-2k modification

    B_k = B_0 - sum_i a_i a_i^T + sum_i b_i b_i^T

where ``a_i = B_i s_i / sqrt(s_i^T B_i s_i)`` and ``b_i = y_i / sqrt(y_i^T s_i)``.
Products with ``B_k`` use this expansion; products with ``B_k^{-1}`` use the
classical two-loop recursion.

Pairs are opaque to this module: ``s`` is a step difference and ``y`` the
matching gradient difference ``grad f(x_{k+1}) - grad f(x_k)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, InvalidArgumentError, StaleStateError

DEFAULT_CURVATURE_THRESHOLD = 1e-10


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a 1-D float64 array, checking length and finiteness."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise InvalidArgumentError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return v


@dataclass(frozen=True)
class UpdateVectors:
    """Rank-one factors of the expansion, one row per stored pair.

    ``generation`` ties the vectors to the matrix state they were computed
    from; any accepted update makes them stale.
    """

    a: np.ndarray
    b: np.ndarray
    generation: int

    @property
    def count(self) -> int:
        return self.a.shape[0]


class LbfgsMatrix:
    """Implicit L-BFGS approximation ``B_k`` to a Hessian.

    Parameters
    ----------
    dim : int
        Ambient dimension ``n``.
    capacity : int
        Maximum number ``M`` of stored pairs.  Once full, the oldest pair is
        dropped before a new one is appended.
    curvature_threshold : float
        A pair is rejected when ``y^T s <= curvature_threshold * |s| |y|``.

    Notes
    -----
    ``gamma`` is 1 on an empty matrix and afterwards ``s^T y / y^T y`` of the
    newest accepted pair.  Because every ``a_i`` depends on ``gamma`` the
    update vectors are rebuilt from scratch after each accepted pair.
    """

    def __init__(self, dim: int, capacity: int,
                 curvature_threshold: float = DEFAULT_CURVATURE_THRESHOLD):
        if int(dim) != dim or dim < 1:
            raise InvalidArgumentError(f"dim must be a positive integer, got {dim!r}")
        if int(capacity) != capacity or capacity < 1:
            raise InvalidArgumentError(f"capacity must be a positive integer, got {capacity!r}")
        self.dim = int(dim)
        self.capacity = int(capacity)
        self.curvature_threshold = float(curvature_threshold)
        self.gamma = 1.0
        self.generation = 0
        self._s: list[np.ndarray] = []
        self._y: list[np.ndarray] = []
        self._rho: list[float] = []
        self._ys: list[float] = []
        self._uv: UpdateVectors | None = None

    def __repr__(self):
        return (f"LbfgsMatrix(dim={self.dim}, capacity={self.capacity}, "
                f"count={self.count}, gamma={self.gamma:.6g})")

    @property
    def count(self) -> int:
        return len(self._s)

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray, float]]:
        """Stored ``(s_i, y_i, 1 / y_i^T s_i)`` triples, oldest first."""
        return list(zip(self._s, self._y, self._rho))

    def update(self, s, y) -> bool:
        """Append the pair ``(s, y)``; return False if it was rejected.

        A rejected pair (insufficient curvature) leaves the matrix untouched.
        """
        s = as_vector(s, self.dim, "s").copy()
        y = as_vector(y, self.dim, "y").copy()
        ys = float(np.dot(y, s))
        if ys <= self.curvature_threshold * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        if self.count == self.capacity:
            del self._s[0], self._y[0], self._rho[0], self._ys[0]
        s.flags.writeable = False
        y.flags.writeable = False
        self._s.append(s)
        self._y.append(y)
        self._rho.append(1.0 / ys)
        self._ys.append(ys)
        self.gamma = ys / float(np.dot(y, y))
        self.generation += 1
        self._uv = None
        return True

    def update_vectors(self) -> UpdateVectors:
        """Update vectors for the current state, computed once per generation."""
        if self._uv is None or self._uv.generation != self.generation:
            self._uv = compute_update_vectors(self)
        return self._uv

    def check_current(self, uv: UpdateVectors | None) -> UpdateVectors:
        if uv is None:
            return self.update_vectors()
        if uv.generation != self.generation or uv.a.shape != (self.count, self.dim):
            raise StaleStateError(
                f"update vectors from generation {uv.generation}, "
                f"matrix is at generation {self.generation}")
        return uv

    def apply_B(self, z, uv: UpdateVectors | None = None) -> np.ndarray:
        """Return ``B_k z`` from the rank-one expansion (2k dots, 2k axpys)."""
        z = as_vector(z, self.dim, "z")
        uv = self.check_current(uv)
        r = z / self.gamma
        if uv.count:
            r = r - uv.a.T @ (uv.a @ z) + uv.b.T @ (uv.b @ z)
        return r

    def apply_Binv(self, z) -> np.ndarray:
        """Return ``B_k^{-1} z`` by the two-loop recursion with ``B_0^{-1} = gamma I``."""
        q = as_vector(z, self.dim, "z").copy()
        k = self.count
        alpha = np.empty(k)
        for i in range(k - 1, -1, -1):
            alpha[i] = self._rho[i] * np.dot(self._s[i], q)
            q -= alpha[i] * self._y[i]
        r = self.gamma * q
        for i in range(k):
            beta = self._rho[i] * np.dot(self._y[i], r)
            r += (alpha[i] - beta) * self._s[i]
        return r


def new_matrix(dim: int, capacity: int) -> LbfgsMatrix:
    return LbfgsMatrix(dim, capacity)


def compute_update_vectors(m: LbfgsMatrix) -> UpdateVectors:
    """Build ``a_i`` and ``b_i`` for every stored pair.

    ``B_i s_i`` is accumulated from the vectors already built for indices
    below ``i``, so the total cost is O(k^2) inner products.

    Raises
    ------
    ConsistencyError
        If some ``s_i^T B_i s_i`` is not positive, i.e. an intermediate
        matrix lost positive definiteness in floating point.
    """
    k, n = m.count, m.dim
    a = np.empty((k, n))
    b = np.empty((k, n))
    for i, (s, y, ys) in enumerate(zip(m._s, m._y, m._ys)):
        bs = s / m.gamma
        if i:
            bs = bs - a[:i].T @ (a[:i] @ s) + b[:i].T @ (b[:i] @ s)
        sbs = float(np.dot(s, bs))
        if not sbs > 0.0:
            raise ConsistencyError(f"s_{i}^T B_{i} s_{i} = {sbs:.3e} is not positive")
        a[i] = bs / np.sqrt(sbs)
        b[i] = y / np.sqrt(ys)
    a.flags.writeable = False
    b.flags.writeable = False
    return UpdateVectors(a=a, b=b, generation=m.generation)


def read_pairs(path: str | os.PathLike) -> tuple[int, list[tuple[np.ndarray, np.ndarray]]]:
    """Read a plain-text pair file.

    The first line holds ``n k``; it is followed by ``k`` blocks of two rows,
    ``s_i`` then ``y_i``, each with ``n`` whitespace-separated numbers.
    Blank lines are ignored.
    """
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise InvalidArgumentError(f"{path}: header must be 'n k'")
    try:
        n, k = int(rows[0][0]), int(rows[0][1])
    except ValueError:
        raise InvalidArgumentError(f"{path}: header must hold two integers") from None
    if n < 1 or k < 0:
        raise InvalidArgumentError(f"{path}: invalid header n={n} k={k}")
    if len(rows) != 1 + 2 * k:
        raise InvalidArgumentError(f"{path}: expected {2 * k} vector rows, found {len(rows) - 1}")
    vecs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise InvalidArgumentError(f"{path}: row {lineno} has {len(row)} entries, expected {n}")
        try:
            vecs.append(as_vector([float(t) for t in row], n, f"row {lineno}"))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: row {lineno}: {exc}") from None
    return n, [(vecs[2 * i], vecs[2 * i + 1]) for i in range(k)]


def write_pairs(path: str | os.PathLike, pairs) -> None:
    pairs = list(pairs)
    if not pairs:
        raise InvalidArgumentError("need at least one pair to infer the dimension")
    n = len(pairs[0][0])
    with open(path, "w") as fh:
        fh.write(f"{n} {len(pairs)}\n")
        for s, y in pairs:
            fh.write(" ".join(repr(float(v)) for v in s) + "\n")
            fh.write(" ".join(repr(float(v)) for v in y) + "\n")


def matrix_from_pairs(n: int, pairs, capacity: int | None = None) -> tuple[LbfgsMatrix, int]:
    """Feed ``pairs`` into a fresh matrix; returns it with the number rejected."""
    m = LbfgsMatrix(n, capacity or max(len(pairs), 1))
    rejected = sum(not m.update(s, y) for s, y in pairs)
    return m, rejected
