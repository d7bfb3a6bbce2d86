"""Kernel backend selection.

The compiled extension is used when it imports; setting ``HALLMHD_PURE=1``
forces the numpy fallback.  ``BACKEND`` names the active implementation.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_compiled = None
if os.environ.get("HALLMHD_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def project_divergence(tensor, k1, k2, k3, inv_ksq, with_curl=False, backend=None):
    impl = _select(backend)
    return impl.project_divergence(np.ascontiguousarray(tensor, dtype=complex),
                                   k1, k2, k3, inv_ksq, bool(with_curl))


def duhamel_trapezoid(sources, decay, h, backend=None):
    impl = _select(backend)
    return impl.duhamel_trapezoid(np.ascontiguousarray(sources, dtype=complex),
                                  np.ascontiguousarray(decay, dtype=float), float(h))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])
