"""Selects the merge-kernel backend at import time.

The compiled extension is preferred when importable; set SCMKIT_BACKEND to
``python`` or ``compiled`` to force one side (``auto`` is the default).
Both backends are drop-in equivalents producing identical merge sequences.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _select():
    choice = os.environ.get("SCMKIT_BACKEND", "auto")
    if choice == "python":
        return _kernels_py, "python"
    if choice == "compiled":
        if _compiled is None:
            raise RuntimeError(
                "SCMKIT_BACKEND=compiled but the compiled kernels are not available; "
                "reinstall with a working C toolchain"
            )
        return _compiled, "compiled"
    if choice == "auto":
        if _compiled is not None:
            return _compiled, "compiled"
        return _kernels_py, "python"
    raise RuntimeError(f"unknown SCMKIT_BACKEND value {choice!r}")


_impl, BACKEND = _select()

average_linkage_merges = _impl.average_linkage_merges
constrained_single_linkage_merges = _impl.constrained_single_linkage_merges
