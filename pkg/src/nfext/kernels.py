"""Hot-kernel dispatch.

The compiled extension ``nfext._kernels`` is used when it imports; otherwise
the numpy implementation in :mod:`nfext._kernels_py` is used. Setting the
environment variable ``NFEXT_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("NFEXT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"

newton_specular = _impl.newton_specular
matched_filter = _impl.matched_filter
distance_derivatives = _kernels_py.distance_derivatives


def implementations():
    """Every available backend, keyed by name (used by tests and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["compiled"] = compiled
    return out
