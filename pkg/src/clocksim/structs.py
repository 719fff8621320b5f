"""Backend selection for the per-event data structures.

The compiled extension (`clocksim._structs`, built from `_structs_cy.pyx`)
is preferred; the pure-Python twin is the fallback.  Set the environment
variable CLOCKSIM_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the backend-comparison tests).
"""

import os

_force_py = os.environ.get("CLOCKSIM_PURE_PYTHON", "") not in ("", "0")

if not _force_py:
    try:
        from ._structs import PrefixSumTree, PutativeQueue

        BACKEND = "compiled"
    except ImportError:
        from ._structs_py import PrefixSumTree, PutativeQueue

        BACKEND = "python"
else:
    from ._structs_py import PrefixSumTree, PutativeQueue

    BACKEND = "python"

__all__ = ["PrefixSumTree", "PutativeQueue", "BACKEND"]
