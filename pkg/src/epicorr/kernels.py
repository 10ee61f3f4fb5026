"""Backend selection for the hot k-means kernels.

The compiled Cython module is used when it was built; otherwise, or when
``EPICORR_PURE_PYTHON=1`` is set, the numpy implementation is used. Both
expose ``kmeans_run`` and ``pairwise_sq_dists`` with identical semantics.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("EPICORR_PURE_PYTHON") != "1":
    _active = _compiled
    BACKEND = "cython"
else:
    _active = _kernels_py
    BACKEND = "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``/``"python"``), or the active one."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels not available; rebuild with `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    return _compiled is not None
