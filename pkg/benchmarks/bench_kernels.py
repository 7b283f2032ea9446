"""Compare the compiled and NumPy kernel backends.

Times the individual kernels on random dominant systems and one full
ring-oscillator transient per backend.  Usage::

    python benchmarks/bench_kernels.py [--sizes 16 64 256] [--repeat 5]
"""
import argparse
import sys
import timeit
from contextlib import contextmanager
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from circuits import random_dominant_matrix, ring_initial_state, ring_netlist  # noqa: E402
from ministep import kernels  # noqa: E402
from ministep.assembly import assemble  # noqa: E402
from ministep.netlist import parse_netlist  # noqa: E402
from ministep.solvers import Method, SolverConfig  # noqa: E402
from ministep.sparse import SparseMatrix  # noqa: E402
from ministep.stepcontrol import DominantStep, max_dominant_step  # noqa: E402
from ministep.transient import TransientConfig, run_transient  # noqa: E402

_NAMES = ("residual", "jacobi_sweep", "gauss_seidel_sweep", "offblock_rhs", "lu_factor", "lu_solve")


@contextmanager
def use_backend(mod):
    saved = {n: getattr(kernels, n) for n in _NAMES}
    for n in _NAMES:
        setattr(kernels, n, getattr(mod, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_cases(n, rng):
    a = random_dominant_matrix(rng, n, density=min(1.0, 8.0 / n))
    m = SparseMatrix.from_dense(a)
    d = np.diag(a).copy()
    b = rng.normal(size=n)
    x = rng.normal(size=n)
    out = np.empty(n)
    args = (m.indptr, m.indices, m.data)
    return {
        "residual": lambda k: k.residual(*args, x, b),
        "jacobi_sweep": lambda k: k.jacobi_sweep(*args, d, b, x, out),
        "gauss_seidel_sweep": lambda k: k.gauss_seidel_sweep(*args, d, b, x.copy()),
        "offblock_rhs": lambda k: k.offblock_rhs(*args, b, x, 0, n // 2 or 1, out[:n // 2 or 1]),
        "lu_factor+solve": lambda k: k.lu_solve(*k.lu_factor(a, 0.0)[:2], b),
    }


def ring_run(stages):
    c = parse_netlist(ring_netlist(stages))
    x0 = ring_initial_state(stages)
    sys_ = assemble(c, x0)
    dt0 = max_dominant_step(sys_.c_matrix, sys_.g_matrix).dt
    cfg = TransientConfig(100 * dt0, 500 * dt0, DominantStep(100 * dt0),
                          solver=SolverConfig(Method.GAUSS_SEIDEL))
    return lambda: run_transient(c, x0, cfg)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--stages", type=int, default=9)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the NumPy kernels are timed")
    names = sorted(backends)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'n':>6}" + "".join(f"{b + ' [us]':>16}" for b in names) + f"{'speedup':>10}")
    for n in args.sizes:
        for label, fn in kernel_cases(n, rng).items():
            times = [best_of(lambda: fn(backends[b]), args.repeat, 20) * 1e6 for b in names]
            ratio = times[names.index("python")] / times[names.index("cython")] if len(names) > 1 else 1.0
            print(f"{label:<20}{n:>6}" + "".join(f"{t:>16.1f}" for t in times) + f"{ratio:>9.1f}x")

    run = ring_run(args.stages)
    times = []
    for b in names:
        with use_backend(backends[b]):
            times.append(best_of(run, max(1, args.repeat // 2), 1))
    ratio = times[names.index("python")] / times[names.index("cython")] if len(names) > 1 else 1.0
    print(f"\n{args.stages}-stage ring transient (gauss-seidel): "
          + ", ".join(f"{b} {t:.3f} s" for b, t in zip(names, times)) + f"  speedup {ratio:.1f}x")


if __name__ == "__main__":
    main()
