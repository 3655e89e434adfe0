import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lbfgs_shift.errors import InvalidArgumentError, ShiftTooSmallError, StaleStateError
from lbfgs_shift.lbfgs_core import LbfgsMatrix
from lbfgs_shift.shifted_solve import (InnerProductCounter, Shift, build, build_diagonal,
                                       solve)

from conftest import dense_bfgs, random_matrix, random_pairs, rel_err


def test_k0_is_pure_scaling():
    m = LbfgsMatrix(6, 3)
    sv = build(m, 1.0)
    assert sv.p.shape == (0, 6) and sv.v.shape == (0,)
    np.testing.assert_array_equal(solve(sv, np.full(6, 2.0)), np.ones(6))


def test_k1_first_term(rng):
    m = LbfgsMatrix(9, 2)
    s = rng.standard_normal(9)
    m.update(s, s)  # gamma = 1
    sv = build(m, 1.0)
    uv = m.update_vectors()
    assert sv.p[0] @ uv.a[0] == pytest.approx(0.5, rel=1e-14)
    assert sv.v[0] == pytest.approx(2.0, rel=1e-14)


def test_shift_too_small():
    m = random_matrix(10, 2, seed=1)
    m.gamma = 1.0
    m._uv = None
    with pytest.raises(ShiftTooSmallError):
        build(m, 1e-14, epsilon=1e-10)


@pytest.mark.parametrize("sigma", [0.0, -1.0, np.inf])
def test_nonpositive_shift_rejected(sigma):
    m = random_matrix(10, 2, seed=1)
    with pytest.raises(InvalidArgumentError):
        build(m, sigma)


def test_matches_dense_n100_k5():
    m = random_matrix(100, 5, seed=2)
    z = np.random.default_rng(3).standard_normal(100)
    x = build(m, 0.5).solve(z)
    ref = np.linalg.solve(dense_bfgs(m) + 0.5 * np.eye(100), z)
    assert np.max(np.abs(x - ref) / np.abs(ref)) <= 1e-8


def test_residual_n1000():
    m = random_matrix(1000, 5, seed=4, dense_model=False)
    z = np.random.default_rng(5).standard_normal(1000)
    x = build(m, 0.5).solve(z)
    res = np.linalg.norm(m.apply_B(x) + 0.5 * x - z) / np.linalg.norm(z)
    assert res <= 1e-10


def test_dimension_mismatch():
    sv = build(random_matrix(10, 2, seed=6), 1.0)
    with pytest.raises(InvalidArgumentError):
        sv.solve(np.ones(11))
    with pytest.raises(InvalidArgumentError):
        build_diagonal(random_matrix(10, 2, seed=6), np.ones(9))


def test_stale_vectors_refused():
    m = random_matrix(10, 2, seed=7, capacity=3)
    uv = m.update_vectors()
    s, y = random_pairs(10, 1, seed=8)[0]
    m.update(s, y)
    with pytest.raises(StaleStateError):
        build(m, 1.0, uv=uv)


# inner products: build uses sum_{j<2k} (j + 1), a solve uses 2k plus the scaling pass
@pytest.mark.parametrize("k,expected", [(0, 1), (1, 6), (5, 66)])
def test_inner_product_count(k, expected):
    m = random_matrix(40, k, seed=9) if k else LbfgsMatrix(40, 1)
    sv = build(m, 1.0)
    c = InnerProductCounter()
    sv.solve(np.ones(40), counter=c)
    assert sv.build_inner_products + c.inner_products == expected
    assert sv.inner_product_count() == expected
    assert c.solves == 1


def test_diagonal_equal_to_scalar_bitwise():
    m = random_matrix(50, 4, seed=10)
    z = np.random.default_rng(11).standard_normal(50)
    xs = build(m, 0.7).solve(z)
    xd = build_diagonal(m, np.full(50, 0.7)).solve(z)
    assert rel_err(xd, xs) <= 1e-14


def test_diagonal_matches_dense():
    rng = np.random.default_rng(12)
    m = random_matrix(80, 4, seed=13)
    d = rng.uniform(0.1, 10.0, 80)
    z = rng.standard_normal(80)
    x = build_diagonal(m, d).solve(z)
    ref = np.linalg.solve(dense_bfgs(m) + np.diag(d), z)
    assert np.max(np.abs(x - ref) / np.abs(ref)) <= 1e-8


def test_diagonal_zero_entry_rejected():
    m = random_matrix(10, 2, seed=14)
    d = np.ones(10)
    d[3] = 0.0
    with pytest.raises(InvalidArgumentError):
        build_diagonal(m, d)


def test_diagonal_floor_checked_against_epsilon():
    m = random_matrix(10, 2, seed=14)
    d = np.ones(10)
    d[0] = 1e-3 * 1e-10 / m.gamma
    with pytest.raises(ShiftTooSmallError):
        build_diagonal(m, d)


@pytest.mark.parametrize("sigma", [0.1, 1.0])
def test_truncated_solver_matches_partial_sums(sigma):
    m = random_matrix(30, 4, seed=15)
    uv = m.update_vectors()
    sv = build(m, sigma)
    z = np.random.default_rng(16).standard_normal(30)
    C = (1.0 / m.gamma + sigma) * np.eye(30)
    for j in range(sv.num_terms + 1):
        assert rel_err(sv.solve(z, terms=j), np.linalg.solve(C, z)) <= 1e-10
        if j < sv.num_terms:
            c = uv.a[j // 2] if j % 2 == 0 else uv.b[j // 2]
            C = C + (-1 if j % 2 == 0 else 1) * np.outer(c, c)


def two_loop_with_shifted_b0(m, z, sigma):
    """The naive variant: two-loop recursion with B_0^{-1} -> (B_0 + sigma I)^{-1}."""
    q = z.copy()
    pairs = m.pairs
    alpha = [0.0] * len(pairs)
    for i in reversed(range(len(pairs))):
        s, y, rho = pairs[i]
        alpha[i] = rho * (s @ q)
        q = q - alpha[i] * y
    r = q / (1.0 / m.gamma + sigma)
    for i, (s, y, rho) in enumerate(pairs):
        r = r + (alpha[i] - rho * (y @ r)) * s
    return r


def test_not_a_naive_substitution():
    for seed in range(5):
        m = random_matrix(60, 3, seed=seed)
        z = np.random.default_rng(seed).standard_normal(60)
        for sigma in (1.0, 10.0):
            x = build(m, sigma).solve(z)
            assert rel_err(two_loop_with_shifted_b0(m, z, sigma), x) >= 1e-6


def test_shift_monotonicity():
    m = random_matrix(70, 5, seed=17)
    g = np.random.default_rng(18).standard_normal(70)
    norms = [np.linalg.norm(build(m, s).solve(g)) for s in (0.1, 1.0, 10.0)]
    assert norms[0] > norms[1] > norms[2]


def test_solver_is_read_only():
    sv = build(random_matrix(10, 2, seed=19), 1.0)
    with pytest.raises(ValueError):
        sv.p[0, 0] = 1.0
    with pytest.raises(ValueError):
        sv.v[0] = 1.0


def test_shift_value_object():
    assert Shift.scalar(2.0).floor == 2.0
    assert Shift.diagonal([3.0, 0.5]).floor == 0.5
    with pytest.raises(InvalidArgumentError):
        Shift.diagonal([])


@settings(max_examples=60, deadline=None)
@given(n=st.integers(15, 200), k=st.integers(0, 7), seed=st.integers(0, 10_000),
       log_sigma=st.floats(-2, 2))
def test_oracle_and_positivity_property(n, k, seed, log_sigma):
    sigma = 10.0 ** log_sigma
    m = random_matrix(n, k, seed) if k else LbfgsMatrix(n, 1)
    z = np.random.default_rng(seed + 1).standard_normal(n)
    sv = build(m, sigma)
    assert np.all(sv.v > 0)
    x = sv.solve(z)
    ref = np.linalg.solve(dense_bfgs(m) + sigma * np.eye(n), z)
    assert np.max(np.abs(x - ref)) / np.max(np.abs(ref)) <= 1e-8
