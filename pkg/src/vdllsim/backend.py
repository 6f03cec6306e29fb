"""Compute-backend selection for the hot numeric kernels.

The inner-loop numerics in :mod:`vdllsim.kernels` are written once, in a
numba-compilable subset of numpy, and bound through :func:`jit`. The
``VDLLSIM_BACKEND`` environment variable picks the lane:

* ``auto`` (default) -- compile with numba when it is importable, fall
  back to plain numpy otherwise
* ``numba``          -- require numba; import fails if it is missing
* ``numpy``          -- never compile, even when numba is installed

The flag trades speed only. Both lanes execute the same source and agree
to floating-point roundoff (pinned by tests/test_backend.py); simulation
output is a function of config + seed alone, and repeated runs on one
lane are byte-identical. ``benchmarks/backend_bench.py`` measures the
difference.
"""

import os

ENV_VAR = "VDLLSIM_BACKEND"

_choice = os.environ.get(ENV_VAR, "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"{ENV_VAR} must be one of 'auto', 'numba', 'numpy'; got {_choice!r}"
    )

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on install
    numba = None
    HAS_NUMBA = False

if _choice == "numba" and not HAS_NUMBA:
    raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")

USE_NUMBA = HAS_NUMBA if _choice == "auto" else _choice == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func):
    """Compile ``func`` on the numba lane, return it unchanged on the numpy lane.

    fastmath stays off: IEEE semantics keep the two lanes numerically
    aligned and runs reproducible.
    """
    if USE_NUMBA:
        return numba.njit(cache=True, fastmath=False)(func)
    return func
