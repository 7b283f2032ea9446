"""Direct and stationary iterative solvers for (C/dt + G) dx = i_s - F.

All iterative methods start from zero and stop on the relative residual
||A x - b||_inf / max(||b||_inf, eps).  They never refuse a matrix that
is not diagonally dominant; they simply report ``converged=False``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .sparse import SparseMatrix

_EPS = 1e-300
PIVOT_RTOL = 1e-14


class SolverError(ArithmeticError):
    pass


class Singular(SolverError):
    pass


class SingularBlock(Singular):
    pass


class ZeroDiagonal(SolverError):
    pass


class BadPartition(ValueError):
    pass


class Method(str, Enum):
    LU = "lu"
    JACOBI = "jacobi"
    GAUSS_SEIDEL = "gauss-seidel"
    BLOCK_JACOBI = "block-jacobi"


@dataclass(frozen=True, eq=False)
class LinearSystem:
    a: SparseMatrix
    b: np.ndarray
    dt: float = math.nan

    def __post_init__(self):
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        if b.shape != (self.a.n,):
            raise ValueError("right-hand side length does not match the matrix")
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand side must be finite")
        object.__setattr__(self, "b", b)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    method: str = ""
    fallback: bool = False


@dataclass(frozen=True)
class SolverConfig:
    """``partition`` lists half-open row ranges (start, stop) for block Jacobi.

    When it is empty, ``blocks`` near-equal contiguous ranges are used.
    ``workers`` > 1 runs block solves on a thread pool.
    """

    method: Method = Method.LU
    tol: float = 1e-10
    max_iters: int = 10000
    partition: tuple[tuple[int, int], ...] = ()
    blocks: int = 1
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "partition", tuple(tuple(p) for p in self.partition))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1 or self.blocks < 1 or self.workers < 1:
            raise ValueError("max_iters, blocks and workers must be at least 1")


def relative_residual(a: SparseMatrix, x, b) -> float:
    r = kernels.residual(a.indptr, a.indices, a.data, np.ascontiguousarray(x, dtype=np.float64), b)
    return float(np.max(np.abs(r)) / max(float(np.max(np.abs(b))), _EPS))


def _dense_lu(a: np.ndarray, scale: float, error=Singular):
    lu, piv, bad = kernels.lu_factor(a, PIVOT_RTOL * scale)
    if bad >= 0:
        raise error(f"zero pivot in column {bad}")
    return lu, piv


def solve_direct(sys: LinearSystem) -> SolveResult:
    """LU with partial pivoting on the dense matrix."""
    a = sys.a
    scale = float(np.max(np.abs(a.data))) if a.data.size else 0.0
    lu, piv = _dense_lu(a.to_dense(), scale)
    x = kernels.lu_solve(lu, piv, sys.b)
    return SolveResult(x, 0, relative_residual(a, x, sys.b), True, Method.LU.value)


def _checked_diag(a: SparseMatrix) -> np.ndarray:
    d = a.diagonal()
    zero = np.flatnonzero(d == 0)
    if zero.size:
        raise ZeroDiagonal(f"zero diagonal in row {int(zero[0])}")
    return d


def _iterate(sys, cfg, sweep, method):
    b = sys.b
    x = np.zeros(sys.a.n)
    res = relative_residual(sys.a, x, b)
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while res > cfg.tol and it < cfg.max_iters:
            x = sweep(x)
            it += 1
            res = relative_residual(sys.a, x, b)
            if not math.isfinite(res):
                break
    return SolveResult(x, it, res, res <= cfg.tol, method)


def solve_jacobi(sys: LinearSystem, cfg: SolverConfig = SolverConfig(Method.JACOBI)) -> SolveResult:
    a = sys.a
    d = _checked_diag(a)

    def sweep(x):
        out = np.empty_like(x)
        kernels.jacobi_sweep(a.indptr, a.indices, a.data, d, sys.b, x, out)
        return out

    return _iterate(sys, cfg, sweep, Method.JACOBI.value)


def solve_gauss_seidel(sys: LinearSystem, cfg: SolverConfig = SolverConfig(Method.GAUSS_SEIDEL)) -> SolveResult:
    a = sys.a
    d = _checked_diag(a)

    def sweep(x):
        x = x.copy()
        kernels.gauss_seidel_sweep(a.indptr, a.indices, a.data, d, sys.b, x)
        return x

    return _iterate(sys, cfg, sweep, Method.GAUSS_SEIDEL.value)


def default_partition(n: int, blocks: int) -> tuple[tuple[int, int], ...]:
    """Contiguous, near-equal ranges; never more blocks than rows."""
    blocks = max(1, min(blocks, n))
    edges = [round(k * n / blocks) for k in range(blocks + 1)]
    return tuple((edges[k], edges[k + 1]) for k in range(blocks))


def validate_partition(partition, n: int) -> tuple[tuple[int, int], ...]:
    parts = sorted((int(lo), int(hi)) for lo, hi in partition)
    if not parts:
        raise BadPartition("partition is empty")
    pos = 0
    for lo, hi in parts:
        if lo != pos or hi <= lo:
            raise BadPartition(f"ranges must be non-empty, disjoint and cover 0..{n}: {partition!r}")
        pos = hi
    if pos != n:
        raise BadPartition(f"ranges must cover 0..{n}: {partition!r}")
    return tuple(parts)


def solve_block_jacobi(sys: LinearSystem, cfg: SolverConfig = SolverConfig(Method.BLOCK_JACOBI)) -> SolveResult:
    """Block Jacobi: each diagonal block is solved exactly by LU.

    Every block reads the previous iterate and writes its own slice of a
    fresh vector, so the result does not depend on block scheduling.
    """
    a, b = sys.a, sys.b
    parts = validate_partition(cfg.partition or default_partition(a.n, cfg.blocks), a.n)
    scale = float(np.max(np.abs(a.data))) if a.data.size else 0.0
    factors = []
    for lo, hi in parts:
        try:
            factors.append(_dense_lu(a.submatrix(lo, hi), scale, SingularBlock))
        except SingularBlock as exc:
            raise SingularBlock(f"block [{lo}, {hi}): {exc}") from None

    def solve_block(k, x_old, x_new):
        lo, hi = parts[k]
        rhs = np.empty(hi - lo)
        kernels.offblock_rhs(a.indptr, a.indices, a.data, b, x_old, lo, hi, rhs)
        lu, piv = factors[k]
        x_new[lo:hi] = kernels.lu_solve(lu, piv, rhs)

    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 and len(parts) > 1 else None

    def sweep(x_old):
        x_new = np.empty_like(x_old)
        if pool is None:
            for k in range(len(parts)):
                solve_block(k, x_old, x_new)
        else:
            list(pool.map(lambda k: solve_block(k, x_old, x_new), range(len(parts))))
        return x_new

    try:
        return _iterate(sys, cfg, sweep, Method.BLOCK_JACOBI.value)
    finally:
        if pool is not None:
            pool.shutdown()


_DISPATCH = {
    Method.JACOBI: solve_jacobi,
    Method.GAUSS_SEIDEL: solve_gauss_seidel,
    Method.BLOCK_JACOBI: solve_block_jacobi,
}


def solve(sys: LinearSystem, cfg: SolverConfig) -> SolveResult:
    """Dispatch on ``cfg.method``."""
    if cfg.method is Method.LU:
        return solve_direct(sys)
    return _DISPATCH[cfg.method](sys, cfg)
