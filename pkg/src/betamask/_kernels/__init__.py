"""Backend selection for the edge aggregation kernels.

The compiled Cython extension is preferred when it imported cleanly; the
numpy fallback is picked otherwise. Set ``BETAMASK_BACKEND=python`` or
``=cython`` to force a choice (forcing cython raises if the extension is
missing, rather than silently degrading).
"""

from __future__ import annotations

import os

from . import numpy_backend

try:
    from . import _edgeops  # type: ignore[attr-defined]
except ImportError:
    _edgeops = None

_forced = os.environ.get("BETAMASK_BACKEND", "").strip().lower()
if _forced == "python":
    _impl = numpy_backend
elif _forced == "cython":
    if _edgeops is None:
        raise ImportError("BETAMASK_BACKEND=cython but the compiled extension is unavailable")
    _impl = _edgeops
else:
    _impl = _edgeops if _edgeops is not None else numpy_backend

degrees = _impl.degrees
aggregate = _impl.aggregate
aggregate_transpose = _impl.aggregate_transpose
edge_dot = _impl.edge_dot


def backend_name() -> str:
    """Returns 'cython' when the compiled kernels are active, else 'python'."""
    return "cython" if _impl is _edgeops and _edgeops is not None else "python"


def available_backends():
    """Names of the kernel implementations importable in this environment."""
    names = ["python"]
    if _edgeops is not None:
        names.insert(0, "cython")
    return names
