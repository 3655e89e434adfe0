"""Random L-BFGS instances and the direct / CG / recursion comparison."""
from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .baselines import (DEFAULT_DENSE_LIMIT, cg_solve, dense_assemble, direct_solve,
                        relative_residual)
from .errors import InvalidArgumentError
from .lbfgs_core import LbfgsMatrix, matrix_from_pairs, read_pairs
from .shifted_solve import DEFAULT_EPSILON, build

SOLVERS = ("direct", "cg", "recursion")
DEFAULT_GRID = (1000, 2000, 5000, 10000, 20000)
LARGE_GRID = (100_000, 200_000, 500_000, 1_000_000, 2_000_000)


def generate_instance(n: int, M: int, seed: int) -> tuple[LbfgsMatrix, np.ndarray]:
    """Deterministic random L-BFGS matrix with ``M`` pairs and a right-hand side.

    Steps ``s_i`` are standard normal and ``y_i = A s_i`` for a diagonal SPD
    model ``A`` with log-uniform entries in [0.5, 5], so every pair has
    positive curvature.
    """
    if M < 1:
        raise InvalidArgumentError(f"need at least one update, got M={M}")
    if n < 2 * M + 1:
        raise InvalidArgumentError(f"n={n} is below 2M+1={2 * M + 1}")
    rng = np.random.default_rng(seed)
    model = np.exp(rng.uniform(np.log(0.5), np.log(5.0), n))
    m = LbfgsMatrix(n, M)
    for _ in range(M):
        s = rng.standard_normal(n)
        if not m.update(s, model * s):
            raise AssertionError("generated pair failed the curvature test")
    return m, rng.standard_normal(n)


@dataclass
class BenchConfig:
    n_list: list = field(default_factory=lambda: list(DEFAULT_GRID))
    updates: int = 5
    sigma: float = 0.5
    seed: int = 0
    solvers: tuple = SOLVERS
    cg_tol_mode: str = "match"  # "match" or "fixed"
    cg_tol: float = 1e-10
    cg_maxit: int = 1000
    repeats: int = 5
    output_format: str = "csv"
    pairs_file: str | None = None
    dense_limit: int = DEFAULT_DENSE_LIMIT
    epsilon: float = DEFAULT_EPSILON

    def validate(self):
        if not self.n_list and self.pairs_file is None:
            raise InvalidArgumentError("n_list must not be empty")
        if any(int(n) < 1 for n in self.n_list):
            raise InvalidArgumentError("every n must be positive")
        if self.updates < 1:
            raise InvalidArgumentError("updates must be at least 1")
        if not self.sigma > 0:
            raise InvalidArgumentError("sigma must be positive")
        if self.repeats < 1:
            raise InvalidArgumentError("repeats must be at least 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown or not self.solvers:
            raise InvalidArgumentError(f"solvers must be a nonempty subset of {SOLVERS}")
        if self.cg_tol_mode not in ("match", "fixed"):
            raise InvalidArgumentError(f"unknown cg tolerance mode {self.cg_tol_mode!r}")
        if self.output_format not in ("csv", "markdown"):
            raise InvalidArgumentError(f"unknown output format {self.output_format!r}")


@dataclass
class BenchRow:
    n: int
    solver: str
    relative_residual: float | None
    wall_time_seconds: float | None
    inner_products: int | None
    iterations: int | None
    status: str
    reason: str = ""


def _timed(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def _instances(cfg: BenchConfig):
    if cfg.pairs_file is not None:
        n, pairs = read_pairs(cfg.pairs_file)
        m, _ = matrix_from_pairs(n, pairs)
        z = np.random.default_rng(cfg.seed).standard_normal(n)
        yield m, z
        return
    for n in cfg.n_list:
        yield generate_instance(int(n), cfg.updates, cfg.seed)


def run_bench(cfg: BenchConfig) -> list[BenchRow]:
    """Run every requested solver on every instance.

    In ``match`` mode the recursion is solved first and its relative
    residual becomes the CG tolerance, so CG is timed to equal accuracy.
    Times are medians over ``cfg.repeats`` runs.
    """
    cfg.validate()
    rows = []
    for m, z in _instances(cfg):
        n = m.dim
        uv = m.update_vectors()
        rec_res = None

        if "recursion" in cfg.solvers or (cfg.cg_tol_mode == "match" and "cg" in cfg.solvers):
            def rec():
                sv = build(m, cfg.sigma, uv=uv, epsilon=cfg.epsilon)
                return sv, sv.solve(z)
            (sv, x), t = _timed(rec, cfg.repeats)
            rec_res = relative_residual(m, cfg.sigma, x, z, uv)
            if "recursion" in cfg.solvers:
                rows.append(BenchRow(n, "recursion", rec_res, t, sv.inner_product_count(),
                                     None, "ok"))

        if "direct" in cfg.solvers:
            if n > cfg.dense_limit:
                rows.append(BenchRow(n, "direct", None, None, None, None, "skipped",
                                     f"dense-limit {cfg.dense_limit}"))
            else:
                x, t = _timed(lambda: direct_solve(
                    dense_assemble(m, cfg.sigma, uv=uv, dense_limit=cfg.dense_limit), z),
                    cfg.repeats)
                rows.append(BenchRow(n, "direct", relative_residual(m, cfg.sigma, x, z, uv), t,
                                     None, None, "ok"))

        if "cg" in cfg.solvers:
            tol = rec_res if cfg.cg_tol_mode == "match" else cfg.cg_tol
            # a recursion residual of exactly zero cannot be matched; ask for machine precision
            tol = max(tol, np.finfo(float).tiny)
            rep, t = _timed(lambda: cg_solve(m, cfg.sigma, z, tol, cfg.cg_maxit, uv=uv),
                            cfg.repeats)
            status = "stagnated" if rep.stagnated else ("ok" if rep.converged else "maxit")
            rows.append(BenchRow(n, "cg", rep.relative_residual, t, rep.inner_products,
                                 rep.iterations, status,
                                 f"tol {tol:.3e}" if cfg.cg_tol_mode == "match" else ""))
    return rows


COLUMNS = [f.name for f in fields(BenchRow)]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)


def format_rows(rows, output_format: str = "csv") -> str:
    if output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_cell(v) for v in asdict(row).values()])
        return buf.getvalue()
    if output_format == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |",
                 "|" + "|".join("---" for _ in COLUMNS) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(_cell(v) for v in asdict(row).values()) + " |")
        return "\n".join(lines) + "\n"
    raise InvalidArgumentError(f"unknown output format {output_format!r}")
