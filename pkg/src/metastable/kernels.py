"""Backend selection for the stance integrator.

The compiled ``_stance`` extension is used when it imports; otherwise the
numpy implementation in ``_stance_py``. Set ``METASTABLE_PURE_PYTHON=1`` to
force the fallback.
"""

import os

from . import _stance_py

ST_LIFTOFF, ST_BOTTOM, ST_TIMEOUT = 0, 1, 2

_compiled = None
if os.environ.get("METASTABLE_PURE_PYTHON") != "1":
    try:
        from . import _stance as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def get_stance_batch(backend: str | None = None):
    """Return the ``stance_batch`` function for ``backend`` ("cython", "numpy", or the default)."""
    if backend is None:
        backend = BACKEND
    if backend == "numpy":
        return _stance_py.stance_batch
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled stance kernel is not built")
        return _compiled.stance_batch
    raise ValueError(f"unknown backend {backend!r}")


def stance_batch(*args):
    return get_stance_batch()(*args)
