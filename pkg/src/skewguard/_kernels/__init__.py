"""Backend selection for the FastMCD inner loops.

The compiled extension is used when it was built; otherwise (or when
``SKEWGUARD_PURE_PYTHON=1`` is set) the numpy implementation is used.  Both
expose ``mahalanobis_sq_rows``, ``csteps`` and ``elemental_stage``.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("SKEWGUARD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

mahalanobis_sq_rows = backend.mahalanobis_sq_rows
csteps = backend.csteps
elemental_stage = backend.elemental_stage

__all__ = ["BACKEND", "backend", "compiled_backend", "python_backend",
           "mahalanobis_sq_rows", "csteps", "elemental_stage"]
