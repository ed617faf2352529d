"""Kernel backend selection: compiled extension if available, numpy fallback otherwise.

Set ``AOAKEY_PURE=1`` to force the pure-numpy implementation. The active
backend name is exposed as :data:`BACKEND`.
"""

import os

from . import _kernels_py

if os.environ.get("AOAKEY_PURE", "") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND

steering_matrix = _impl.steering_matrix
xsbs_power = _impl.xsbs_power
quantize_levels = _impl.quantize_levels
gray_encode = _impl.gray_encode

# matmul-shaped; the BLAS-backed numpy form beats a compiled scalar loop
music_power = _kernels_py.music_power
