"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python twins in ``_pykernels`` are used. Set ``CROWDSHIP_PURE=1`` to
force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
tick = _pykernels.tick
dijkstra = _pykernels.dijkstra
budget_paths = _pykernels.budget_paths

if os.environ.get("CROWDSHIP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        dijkstra = _ckernels.dijkstra
        budget_paths = _ckernels.budget_paths

__all__ = ["BACKEND", "dijkstra", "budget_paths", "tick"]
