import numpy as np
import pytest

from lbfgs_shift.lbfgs_core import LbfgsMatrix


def random_pairs(n, k, seed, dense_model=True):
    """k curvature-positive pairs from a random SPD model (dense or diagonal)."""
    rng = np.random.default_rng(seed)
    if dense_model:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = (q * np.exp(rng.uniform(np.log(0.2), np.log(20.0), n))) @ q.T
    else:
        A = np.diag(np.exp(rng.uniform(np.log(0.5), np.log(5.0), n)))
    pairs = []
    for _ in range(k):
        s = rng.standard_normal(n)
        pairs.append((s, A @ s))
    return pairs


def random_matrix(n, k, seed, capacity=None, dense_model=True):
    m = LbfgsMatrix(n, capacity or max(k, 1))
    for s, y in random_pairs(n, k, seed, dense_model):
        assert m.update(s, y)
    return m


def dense_bfgs(m):
    """B_k from the textbook dense BFGS update, starting at I / gamma."""
    B = np.eye(m.dim) / m.gamma
    for s, y, _ in m.pairs:
        Bs = B @ s
        B = B - np.outer(Bs, Bs) / (s @ Bs) + np.outer(y, y) / (y @ s)
    return B


def rel_err(x, ref, ord=None):
    return np.linalg.norm(x - ref, ord) / np.linalg.norm(ref, ord)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion number, title, passed, detail) appended by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
