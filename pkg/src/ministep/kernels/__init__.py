"""Inner-loop kernels, compiled when available.

``BACKEND`` names the implementation picked at import: ``"cython"`` when
the extension module was built, ``"python"`` otherwise.  Both modules
expose the same functions and can be imported directly for comparison.
"""
try:
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:  # extension not built
    from . import _pykernels as _impl
    BACKEND = "python"

residual = _impl.residual
jacobi_sweep = _impl.jacobi_sweep
gauss_seidel_sweep = _impl.gauss_seidel_sweep
offblock_rhs = _impl.offblock_rhs
lu_factor = _impl.lu_factor
lu_solve = _impl.lu_solve


def available_backends():
    """Return a mapping of backend name to kernel module for every importable backend."""
    from . import _pykernels
    out = {"python": _pykernels}
    if BACKEND == "cython":
        out["cython"] = _impl
    return out
