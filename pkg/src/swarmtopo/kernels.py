"""Kernel backend selection.

The compiled extension is used when it has been built; otherwise the numpy
fallback is loaded. Setting ``SWARMTOPO_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("SWARMTOPO_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

prufer_encode = _impl.prufer_encode
prufer_decode = _impl.prufer_decode
edge_velocities = _impl.edge_velocities
potential_energy = _impl.potential_energy
disk_union_cells = _impl.disk_union_cells


def available_backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
