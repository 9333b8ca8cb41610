"""Hot-kernel dispatch: compiled extension when available, NumPy otherwise.

Set ``SPOTREES_PURE_PYTHON=1`` to force the NumPy fallback (used by the
kernel benchmark and by tests that compare the two backends).
"""

import os

from .reference import solve_grid_batch as solve_grid_batch_reference

BACKEND = "numpy"
solve_grid_batch = solve_grid_batch_reference

if not os.environ.get("SPOTREES_PURE_PYTHON"):
    try:
        from ._gridpath import solve_grid_batch as _compiled
    except ImportError:
        pass
    else:
        solve_grid_batch = _compiled
        BACKEND = "compiled"

__all__ = ["solve_grid_batch", "solve_grid_batch_reference", "BACKEND"]
