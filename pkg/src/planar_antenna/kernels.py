"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``PLANAR_ANTENNA_PURE_PYTHON`` is set to a non-empty value, the pure-Python
implementations are used.  Both give identical results.
"""
import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def load(name=None):
    """Kernel module by name, or the default one when ``name`` is None."""
    if name is None:
        name = "python" if os.environ.get("PLANAR_ANTENNA_PURE_PYTHON") else default_name()
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def default_name():
    return "compiled" if _compiled is not None else "python"
