"""Kernel backend selection.

REFINERY_KERNELS=auto|compiled|python picks the lane. "auto" prefers the
compiled extension and silently falls back to the NumPy lane when the
extension was not built; "compiled" makes the absence an error.
"""

import os

from . import _numpy as _py

_requested = os.environ.get("REFINERY_KERNELS", "auto").strip().lower()
if _requested not in {"auto", "compiled", "python"}:
    raise RuntimeError(
        f"REFINERY_KERNELS must be auto, compiled or python, got {_requested!r}"
    )

_impl = None
if _requested in {"auto", "compiled"}:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError(
                "REFINERY_KERNELS=compiled but the extension is not built"
            ) from None

if _impl is None:
    _impl = _py

backend = "python" if _impl is _py else "compiled"
reference = _py

expand_digits = _impl.expand_digits
horner_compose = _impl.horner_compose
apply_digit_matrices = _impl.apply_digit_matrices
