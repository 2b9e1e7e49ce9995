"""Numerical kernels with a compiled core and a pure-python fallback.

The Cython extension (_core) is used when it was built; otherwise the numpy
implementation (_fallback) takes over transparently. Set
AIRSCHED_PURE_PYTHON=1 to force the fallback, e.g. for benchmarking.
Both backends implement the same functions with identical semantics.
"""
from __future__ import annotations

import os

from . import _fallback

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:
    _core = None

_FORCE_PYTHON = os.environ.get("AIRSCHED_PURE_PYTHON", "") in ("1", "true", "yes")

if _core is not None and not _FORCE_PYTHON:
    _impl = _core
    BACKEND = "compiled"
else:
    _impl = _fallback
    BACKEND = "python"

interference = _impl.interference
rates = _impl.rates
denominators = _impl.denominators
concave_grad = _impl.concave_grad
tangent_row_slopes = _impl.tangent_row_slopes
fw_line_search = _impl.fw_line_search
max_weight_matching = _impl.max_weight_matching
max_weight_matching_batch = _impl.max_weight_matching_batch


def available_backends() -> list[str]:
    out = ["python"]
    if _core is not None:
        out.insert(0, "compiled")
    return out


def get_backend(name: str):
    """Return the backend module by name ('compiled' or 'python')."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _core is None:
            raise RuntimeError("the compiled kernel extension is not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")
