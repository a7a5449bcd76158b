"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded.  Setting ``SLICEDVP_PURE_PYTHON=1`` forces the
numpy path.  ``use(name)`` switches backends at run time; callers look the
kernels up on this module, so the switch takes effect everywhere.
"""

import os

from . import _pykernels

_NAMES = ("mixture_cdf", "mixture_sf", "mixture_pdf", "mixture_quantile", "transport_batch")


def backends():
    """Map of available backend name -> kernel module."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found


def use(name):
    """Route the kernel functions to backend ``name`` ("python" or "cython")."""
    global ACTIVE, BACKEND
    avail = backends()
    if name not in avail:
        raise ValueError(f"backend {name!r} is not available; have {sorted(avail)}")
    for fn in _NAMES:
        globals()[fn] = getattr(avail[name], fn)
    ACTIVE = BACKEND = name


if os.environ.get("SLICEDVP_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    use("python")
else:
    use("cython" if "cython" in backends() else "python")
