"""Kernel backend chosen at import.

The compiled extension is used when it was built; otherwise the numpy
implementation. ``SIBKIT_BACKEND=python`` forces the fallback and
``SIBKIT_BACKEND=cython`` makes a missing extension an error.
"""
from __future__ import annotations

import os

from . import _pykernels

_choice = os.environ.get("SIBKIT_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
posteriors = _impl.posteriors
sib_step = _impl.sib_step
sib_iterate = _impl.sib_iterate
triples = _impl.triples


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
