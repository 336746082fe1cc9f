"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``COALLOC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from coalloc import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from coalloc import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    BACKENDS["cython"] = _kernels

if _kernels is not None and os.environ.get("COALLOC_PURE_PYTHON", "") in ("", "0"):
    NAME = "cython"
else:
    NAME = "python"

kernels = BACKENDS[NAME]


def get(name=None):
    """Return the kernel module ``name`` (default: the selected one)."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available; have {sorted(BACKENDS)}") from None
