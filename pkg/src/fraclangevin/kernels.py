"""Backend selection for the ensemble kernel.

The compiled extension is used when it imports; setting
``FRACLANGEVIN_PURE_PYTHON=1`` forces the NumPy fallback.
"""
import os

from . import _pykernels

U_QUADRATIC = _pykernels.U_QUADRATIC
U_BUMP = _pykernels.U_BUMP

BACKEND = "python"
advance = _pykernels.advance

if os.environ.get("FRACLANGEVIN_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        advance = _ckernels.advance
        BACKEND = "cython"


def get_advance(backend=None):
    """The kernel for ``backend`` in {"cython", "python"}, or the active one."""
    if backend is None:
        return advance
    if backend == "python":
        return _pykernels.advance
    if backend == "cython":
        from . import _ckernels

        return _ckernels.advance
    raise ValueError(f"unknown backend {backend!r}")
