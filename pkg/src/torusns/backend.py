"""Kernel backend selection.

Hot inner loops (mode-wise projection, spectral multipliers, fixed-order
reductions, slab evaluation) exist in two implementations: numba-compiled
and pure numpy. The environment variable

    TORUSNS_BACKEND = "numba" | "numpy"

selects the path; default is numba when it imports, numpy otherwise. Both
paths execute the floating-point operations in the same order, so switching
backends does not change results (see tests/test_kernels.py).
"""

import os

_choice = os.environ.get("TORUSNS_BACKEND", "").strip().lower()

if _choice not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"TORUSNS_BACKEND={_choice!r} not understood (use 'numba' or 'numpy')"
    )

if _choice == "numpy":
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_ENABLED = False


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
