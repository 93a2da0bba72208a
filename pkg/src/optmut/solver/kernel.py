"""Pivot-kernel backend selection.

The compiled Cython kernel is used when the extension built; setting
OPTMUT_PURE_PYTHON=1 (or a missing extension) selects the pure-Python
twin. Both produce bit-identical results; the compiled one is just fast.
"""

import os

from . import _pykernel


def _load():
    if os.environ.get("OPTMUT_PURE_PYTHON"):
        return _pykernel.run_simplex, "python"
    try:
        from . import _simplexc
    except ImportError:
        return _pykernel.run_simplex, "python"
    return _simplexc.run_simplex, "cython"


run_simplex, BACKEND = _load()


def available_backends():
    """All importable kernels, keyed by name (for benchmarks and tests)."""
    out = {"python": _pykernel.run_simplex}
    try:
        from . import _simplexc

        out["cython"] = _simplexc.run_simplex
    except ImportError:
        pass
    return out
