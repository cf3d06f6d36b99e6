"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module.  Setting ``LKCAND_PURE_PYTHON=1`` forces
the fallback.
"""
from __future__ import annotations

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

if os.environ.get("LKCAND_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # pragma: no cover - depends on the build
        log.warning("compiled kernels unavailable; using the pure-Python fallback")
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
prim_mst = _impl.prim_mst
path_max = _impl.path_max
two_opt_descent = _impl.two_opt_descent
three_opt_descent = _impl.three_opt_descent
held_karp = _impl.held_karp


def available_backends() -> dict[str, object]:
    out: dict[str, object] = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:  # pragma: no cover
        pass
    else:
        out["cython"] = _ckernels
    return out
