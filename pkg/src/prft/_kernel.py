"""Propagation-kernel dispatch.

Prefers the compiled extension ``prft._cf4`` when it imported cleanly and the
environment variable ``PRFT_PURE_PYTHON`` is not set to ``1``; otherwise the
NumPy fallback is used.  Both expose the same ``cf4_advance`` contract.
"""

from __future__ import annotations

import os

from . import _cf4_fallback

__all__ = ["cf4_advance", "cf4_advance_fallback", "KERNEL_NAME", "HAVE_COMPILED"]

cf4_advance_fallback = _cf4_fallback.cf4_advance

if os.environ.get("PRFT_PURE_PYTHON") == "1":
    _impl = _cf4_fallback
else:
    try:
        from . import _cf4 as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _cf4_fallback

KERNEL_NAME: str = _impl.KERNEL_NAME
HAVE_COMPILED: bool = KERNEL_NAME == "cython"

if HAVE_COMPILED:

    def cf4_advance(u, h0, ops, g, omega, zphase, t0, h, nsteps):
        """Advance propagators in place, using the compiled kernel when it applies.

        The compiled path is specialized to two-level matter systems; larger
        dimensions always go through the NumPy fallback.
        """
        if u.shape[1] == 2:
            _impl.cf4_advance(u, h0, ops, g, omega, zphase, t0, h, nsteps)
        else:
            _cf4_fallback.cf4_advance(u, h0, ops, g, omega, zphase, t0, h, nsteps)

else:
    cf4_advance = _cf4_fallback.cf4_advance
