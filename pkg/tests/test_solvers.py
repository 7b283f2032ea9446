import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuits import random_dominant_matrix
from ministep import kernels
from ministep.solvers import (BadPartition, LinearSystem, Method, Singular, SingularBlock,
                              SolverConfig, ZeroDiagonal, default_partition, relative_residual,
                              solve, solve_block_jacobi, solve_direct, solve_gauss_seidel,
                              solve_jacobi, validate_partition)
from ministep.sparse import SparseMatrix

seeds = st.integers(0, 2**32 - 1)
_NAMES = ("residual", "jacobi_sweep", "gauss_seidel_sweep", "offblock_rhs", "lu_factor", "lu_solve")


@pytest.fixture(params=sorted(kernels.available_backends()), autouse=True)
def backend(request, monkeypatch):
    mod = kernels.available_backends()[request.param]
    for name in _NAMES:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


def ls(a, b):
    return LinearSystem(SparseMatrix.from_dense(a), np.asarray(b, dtype=float))


TRIDIAG = [[2.0, -1.0], [-1.0, 2.0]]


def test_direct_examples():
    r = solve_direct(ls(np.eye(3), [1.0, -2.0, 3.5]))
    assert np.array_equal(r.x, [1.0, -2.0, 3.5]) and r.iterations == 0 and r.converged
    r = solve_direct(ls(TRIDIAG, [1, 1]))
    assert np.allclose(r.x, [1, 1], rtol=1e-15)
    with pytest.raises(Singular):
        solve_direct(ls([[1, 1], [1, 1]], [1, 2]))


def test_direct_against_numpy_oracle():
    rng = np.random.default_rng(3)
    for n in (1, 5, 17, 40):
        a = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        r = solve_direct(ls(a, b))
        assert np.allclose(r.x, np.linalg.solve(a, b), rtol=1e-11, atol=1e-12)
        assert r.residual_norm <= 1e-12


@pytest.mark.parametrize("fn", [solve_jacobi, solve_gauss_seidel])
def test_point_methods_examples(fn):
    r = fn(ls([[1.0]], [3.0]))
    assert r.x[0] == 3.0 and r.iterations == 1 and r.converged
    r = fn(ls(TRIDIAG, [1, 1]))
    assert r.converged and np.max(np.abs(r.x - 1)) < 1e-9
    with pytest.raises(ZeroDiagonal):
        fn(ls([[0, 1], [1, 0]], [1, 1]))


def test_gauss_seidel_not_slower_on_tridiag():
    j = solve_jacobi(ls(TRIDIAG, [1, 1]))
    g = solve_gauss_seidel(ls(TRIDIAG, [1, 1]))
    assert g.iterations <= j.iterations


def test_block_jacobi_examples():
    sys = ls(TRIDIAG, [1, 1])
    one = solve_block_jacobi(sys, SolverConfig(Method.BLOCK_JACOBI, partition=((0, 2),)))
    direct = solve_direct(sys)
    assert one.iterations == 1 and np.array_equal(one.x, direct.x)
    cells = solve_block_jacobi(sys, SolverConfig(Method.BLOCK_JACOBI, partition=((0, 1), (1, 2))))
    jac = solve_jacobi(sys)
    assert cells.iterations == jac.iterations and np.array_equal(cells.x, jac.x)


def test_block_jacobi_two_halves_of_8x8():
    rng = np.random.default_rng(8)
    for _ in range(10):
        a = random_dominant_matrix(rng, 8)
        b = rng.normal(size=8)
        r = solve_block_jacobi(ls(a, b), SolverConfig(Method.BLOCK_JACOBI, partition=((0, 4), (4, 8))))
        ref = solve_direct(ls(a, b)).x
        assert r.converged
        assert np.max(np.abs(r.x - ref)) <= 1e-8 * (1 + np.max(np.abs(ref)))


@pytest.mark.parametrize("part", [(), ((0, 1),), ((0, 2), (1, 3)), ((0, 1), (2, 3)), ((0, 3), (3, 3)),
                                  ((0, 4),)])
def test_bad_partitions(part):
    with pytest.raises(BadPartition):
        validate_partition(part, 3)


def test_singular_block():
    a = [[1.0, 0.0, 0.5], [0.0, 0.0, 1.0], [0.5, 1.0, 3.0]]
    with pytest.raises(SingularBlock):
        solve_block_jacobi(ls(a, [1, 1, 1]), SolverConfig(Method.BLOCK_JACOBI, partition=((0, 2), (2, 3))))


def test_default_partition():
    assert default_partition(10, 4) == ((0, 2), (2, 5), (5, 8), (8, 10))
    assert default_partition(2, 5) == ((0, 1), (1, 2))
    assert validate_partition(default_partition(7, 3), 7) == default_partition(7, 3)


def test_non_dominant_reports_non_convergence():
    a = [[1.0, 3.0], [3.0, 1.0]]
    cfg = SolverConfig(Method.JACOBI, max_iters=2000)
    r = solve_jacobi(ls(a, [1, 1]), cfg)
    assert not r.converged
    assert r.iterations <= 2000


def test_zero_rhs_converges_immediately():
    r = solve_jacobi(ls(TRIDIAG, [0, 0]))
    assert r.iterations == 0 and r.converged and np.array_equal(r.x, [0, 0])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(blocks=0)
    assert SolverConfig("gauss-seidel").method is Method.GAUSS_SEIDEL


def test_dispatch():
    sys = ls(TRIDIAG, [1, 1])
    for m in Method:
        r = solve(sys, SolverConfig(m))
        assert r.method == m.value and r.converged


def _dominant_system(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 65))
    a = random_dominant_matrix(rng, n)
    b = rng.normal(size=n) * 10 ** rng.uniform(-6, 3)
    return rng, ls(a, b)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_all_methods_agree_with_direct(seed):
    rng, sys = _dominant_system(seed)
    ref = solve_direct(sys).x
    blocks = int(rng.integers(1, 6))
    for cfg in (SolverConfig(Method.JACOBI), SolverConfig(Method.GAUSS_SEIDEL),
                SolverConfig(Method.BLOCK_JACOBI, blocks=blocks)):
        r = solve(sys, cfg)
        assert r.converged
        assert np.max(np.abs(r.x - ref)) <= 1e-8 * (1 + np.max(np.abs(ref)))
        # independent recomputation of the stopping criterion
        res = np.max(np.abs(sys.b - sys.a.to_dense() @ r.x)) / np.max(np.abs(sys.b))
        assert res <= cfg.tol * (1 + 1e-6)
        assert r.residual_norm == relative_residual(sys.a, r.x, sys.b)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_unit_blocks_reproduce_jacobi_exactly(seed):
    _, sys = _dominant_system(seed)
    n = sys.a.n
    cfg = SolverConfig(Method.BLOCK_JACOBI, partition=tuple((i, i + 1) for i in range(n)))
    for iters in (1, 3, 10**4):
        jc = SolverConfig(Method.JACOBI, max_iters=iters)
        bc = SolverConfig(Method.BLOCK_JACOBI, partition=cfg.partition, max_iters=iters)
        j, b = solve_jacobi(sys, jc), solve_block_jacobi(sys, bc)
        assert j.iterations == b.iterations
        assert np.array_equal(j.x, b.x)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_single_block_equals_direct(seed):
    _, sys = _dominant_system(seed)
    r = solve_block_jacobi(sys, SolverConfig(Method.BLOCK_JACOBI, blocks=1))
    assert r.iterations == 1 and np.array_equal(r.x, solve_direct(sys).x)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_threaded_block_jacobi_matches_serial(seed):
    rng, sys = _dominant_system(seed)
    blocks = int(rng.integers(2, 8))
    serial = solve_block_jacobi(sys, SolverConfig(Method.BLOCK_JACOBI, blocks=blocks))
    threaded = solve_block_jacobi(sys, SolverConfig(Method.BLOCK_JACOBI, blocks=blocks, workers=4))
    assert serial.iterations == threaded.iterations
    assert np.array_equal(serial.x, threaded.x)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_deterministic(seed):
    _, sys = _dominant_system(seed)
    for fn in (solve_jacobi, solve_gauss_seidel, solve_block_jacobi):
        assert np.array_equal(fn(sys).x, fn(sys).x)


def test_gauss_seidel_iterations_soft_benchmark():
    # observed behaviour on the synthetic corpus, not a theorem
    rng = np.random.default_rng(11)
    wins = 0
    for _ in range(50):
        n = int(rng.integers(2, 40))
        sys = ls(random_dominant_matrix(rng, n), rng.normal(size=n))
        wins += solve_gauss_seidel(sys).iterations <= solve_jacobi(sys).iterations
    assert wins >= 45
