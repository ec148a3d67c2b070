"""Kernel backend selection.

Imports the compiled extension when available and falls back to the pure
Python mirror otherwise.  FORKGARDEN_BACKEND=python or =compiled forces a
choice (the latter raises if the extension is missing), which the test
suite uses to compare both paths.
"""

from __future__ import annotations

import os

import numpy as np

_forced = os.environ.get("FORKGARDEN_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise ImportError(f"FORKGARDEN_BACKEND must be 'python' or 'compiled', got {_forced!r}")

if _forced == "python":
    from forkgarden import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from forkgarden import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from forkgarden import _kernels_py as _impl

        BACKEND = "python"


def backend_name() -> str:
    return BACKEND


def make_profile(xtx, xty, yty, gx, gy, gn, n):
    """Construct a RandomInterceptProfile on the active backend.

    Inputs are numpy arrays (float64 except gn, any integer dtype); the
    pure-Python backend receives them as nested lists of scalars.
    """
    xtx = np.ascontiguousarray(xtx, dtype=np.float64)
    xty = np.ascontiguousarray(xty, dtype=np.float64)
    gx = np.ascontiguousarray(gx, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    gn = np.ascontiguousarray(gn, dtype=np.int64)
    if BACKEND == "compiled":
        return _impl.RandomInterceptProfile(xtx, xty, float(yty), gx, gy, gn, int(n))
    return _impl.RandomInterceptProfile(
        xtx.tolist(),
        xty.tolist(),
        float(yty),
        gx.tolist(),
        gy.tolist(),
        [int(v) for v in gn],
        int(n),
    )
