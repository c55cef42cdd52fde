"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
kernels are the fallback. ``TEACHKIT_BACKEND=numpy`` forces the fallback
(used by the backend benchmark), ``TEACHKIT_BACKEND=compiled`` fails loudly
if the extension is missing.
"""

import os

_requested = os.environ.get("TEACHKIT_BACKEND", "").strip().lower()

if _requested in ("", "compiled"):
    try:
        from . import _speedups as kernels
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "TEACHKIT_BACKEND=compiled but the _speedups extension is not "
                "built; run `pip install -e . --no-build-isolation`"
            )
        from . import kernels_ref as kernels
elif _requested in ("numpy", "ref"):
    from . import kernels_ref as kernels
else:
    raise ValueError(f"unknown TEACHKIT_BACKEND value: {_requested!r}")

BACKEND_NAME = kernels.NAME
